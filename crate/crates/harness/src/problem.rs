//! Synthetic problem instances and the on-disk problem bundle.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ttr_core::decompose::{random_tt, tt_svd, validate_ranks};
use ttr_core::rng::derive_seed;
use ttr_core::sensing::{measure, CorruptionModel, GaussianEnsemble, StorageMode, DEFAULT_OUTLIER_VARIANCE};
use ttr_core::tensor::{read_f64_vec, write_f64s};
use ttr_core::{DenseTensor, TtTensor};

use crate::{read_json, write_json};

pub const BUNDLE_FORMAT: &str = "PRB1";
pub const BUNDLE_FILE: &str = "problem.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XstarFormat {
    #[default]
    Ttf,
    Dtf,
}

/// Input of `make-problem`. Seeds left out are derived from `master_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub m: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub p_s: f64,
    #[serde(default = "default_sigma2")]
    pub outlier_sigma2: f64,
    #[serde(default)]
    pub xstar_seed: Option<u64>,
    #[serde(default)]
    pub support_seed: Option<u64>,
    #[serde(default)]
    pub value_seed: Option<u64>,
    #[serde(default = "default_storage")]
    pub storage: StorageMode,
    #[serde(default)]
    pub xstar_format: XstarFormat,
}

fn default_sigma2() -> f64 {
    DEFAULT_OUTLIER_VARIANCE
}

fn default_storage() -> StorageMode {
    StorageMode::Auto
}

impl ProblemConfig {
    pub fn new(dims: Vec<usize>, ranks: Vec<usize>, m: usize, p_s: f64, master_seed: u64) -> Self {
        Self {
            dims,
            ranks,
            m,
            master_seed,
            p_s,
            outlier_sigma2: DEFAULT_OUTLIER_VARIANCE,
            xstar_seed: None,
            support_seed: None,
            value_seed: None,
            storage: StorageMode::Auto,
            xstar_format: XstarFormat::Ttf,
        }
    }

    pub fn xstar_seed(&self) -> u64 {
        self.xstar_seed.unwrap_or_else(|| derive_seed(self.master_seed, &[1]))
    }

    pub fn corruption(&self) -> CorruptionModel {
        CorruptionModel {
            p_s: self.p_s,
            outlier_sigma2: self.outlier_sigma2,
            support_seed: self.support_seed.unwrap_or_else(|| derive_seed(self.master_seed, &[2])),
            value_seed: self.value_seed.unwrap_or_else(|| derive_seed(self.master_seed, &[3])),
        }
    }
}

/// The problem bundle written next to its payload files. Paths are relative
/// to the bundle's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub m: usize,
    pub master_seed: u64,
    pub p_s: f64,
    pub outlier_sigma2: f64,
    pub xstar_seed: u64,
    pub support_seed: u64,
    pub value_seed: u64,
    pub support_size: usize,
    pub xstar_file: String,
    pub y_file: String,
}

/// A generated or loaded instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub ensemble: GaussianEnsemble,
    pub x_star_tt: TtTensor,
    pub x_star: DenseTensor,
    pub y: Vec<f64>,
    pub corruption: CorruptionModel,
    pub support: Vec<usize>,
}

/// Draws `X⋆` with `random_tt`, the ensemble, clean measurements and the
/// corruption.
pub fn generate(cfg: &ProblemConfig) -> Result<Problem> {
    validate_ranks(&cfg.dims, &cfg.ranks)?;
    let corruption = cfg.corruption();
    corruption.validate()?;
    let x_star_tt = random_tt(&cfg.dims, &cfg.ranks, cfg.xstar_seed())?;
    let x_star = x_star_tt.to_dense();
    let ensemble = GaussianEnsemble::new(cfg.m, cfg.dims.clone(), cfg.master_seed, cfg.storage)?;
    let meas = measure(&ensemble, &x_star, &corruption)?;
    Ok(Problem {
        dims: cfg.dims.clone(),
        ranks: cfg.ranks.clone(),
        ensemble,
        x_star_tt,
        x_star,
        y: meas.y,
        corruption,
        support: meas.support,
    })
}

/// Writes `problem.json`, the ground truth and `y.bin` into `dir`.
pub fn write_bundle(cfg: &ProblemConfig, problem: &Problem, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let xstar_file = match cfg.xstar_format {
        XstarFormat::Ttf => {
            let name = "xstar.ttf";
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            problem.x_star_tt.write_ttf(&mut w)?;
            w.flush()?;
            name
        }
        XstarFormat::Dtf => {
            let name = "xstar.dtf";
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            problem.x_star.write_dtf(&mut w)?;
            w.flush()?;
            name
        }
    };
    let y_file = "y.bin";
    let mut w = BufWriter::new(File::create(dir.join(y_file))?);
    write_f64s(&mut w, &problem.y)?;
    w.flush()?;

    let bundle = Bundle {
        format: BUNDLE_FORMAT.to_string(),
        dims: cfg.dims.clone(),
        ranks: cfg.ranks.clone(),
        m: cfg.m,
        master_seed: cfg.master_seed,
        p_s: cfg.p_s,
        outlier_sigma2: cfg.outlier_sigma2,
        xstar_seed: cfg.xstar_seed(),
        support_seed: problem.corruption.support_seed,
        value_seed: problem.corruption.value_seed,
        support_size: problem.support.len(),
        xstar_file: xstar_file.to_string(),
        y_file: y_file.to_string(),
    };
    let path = dir.join(BUNDLE_FILE);
    write_json(&path, &bundle)?;
    Ok(path)
}

/// Reads a bundle and rebuilds its ensemble from the stored seed. The
/// outlier support is not stored and is left empty.
pub fn load_bundle(path: &Path, storage: StorageMode) -> Result<(Bundle, Problem)> {
    let bundle: Bundle = read_json(path)?;
    if bundle.format != BUNDLE_FORMAT {
        bail!("{} is not a {BUNDLE_FORMAT} bundle", path.display());
    }
    validate_ranks(&bundle.dims, &bundle.ranks)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let xpath = base.join(&bundle.xstar_file);
    let open = |p: &Path| File::open(p).map(BufReader::new).with_context(|| format!("opening {}", p.display()));
    let (x_star_tt, x_star) = if bundle.xstar_file.ends_with(".dtf") {
        let x = DenseTensor::read_dtf(open(&xpath)?)?;
        (tt_svd(&x, &bundle.ranks)?.tt, x)
    } else {
        let tt = TtTensor::read_ttf(open(&xpath)?)?;
        let x = tt.to_dense();
        (tt, x)
    };
    if x_star.dims() != bundle.dims.as_slice() {
        bail!("ground truth dims {:?} do not match the bundle {:?}", x_star.dims(), bundle.dims);
    }
    let y = read_f64_vec(&mut open(&base.join(&bundle.y_file))?)?;
    if y.len() != bundle.m {
        bail!("{} holds {} measurements, bundle says {}", bundle.y_file, y.len(), bundle.m);
    }
    let ensemble = GaussianEnsemble::new(bundle.m, bundle.dims.clone(), bundle.master_seed, storage)?;
    let problem = Problem {
        dims: bundle.dims.clone(),
        ranks: bundle.ranks.clone(),
        ensemble,
        x_star_tt,
        x_star,
        y,
        corruption: CorruptionModel {
            p_s: bundle.p_s,
            outlier_sigma2: bundle.outlier_sigma2,
            support_seed: bundle.support_seed,
            value_seed: bundle.value_seed,
        },
        support: Vec::new(),
    };
    Ok((bundle, problem))
}
