//! Initialization followed by one solver run.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ttr_core::sensing::GaussianEnsemble;
use ttr_core::solvers::{
    frsubgm_run, psubgm_run, truncated_spectral_init, SigmaBarMode, SolverConfig, SolverOutput, StepSchedule,
};
use ttr_core::{DenseTensor, Error as CoreError, TtTensor};

use crate::problem::{load_bundle, Problem};
use crate::trace_io::write_trace_csv;
use crate::write_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Psubgm,
    Frsubgm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Psubgm => "psubgm",
            SolverKind::Frsubgm => "frsubgm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Truncated spectral initialization.
    Truncated,
    /// A TT file given with `--x0`.
    Provided,
}

/// Builds the initial iterate: truncated spectral, or `provided` brought to
/// left-orthogonal form when the solver needs it.
pub fn initial_iterate(
    a: &GaussianEnsemble,
    y: &[f64],
    ranks: &[usize],
    alpha: f64,
    provided: Option<TtTensor>,
) -> Result<TtTensor> {
    match provided {
        None => Ok(truncated_spectral_init(a, y, ranks, alpha)?),
        Some(tt) => {
            if tt.dims() != a.dims() || tt.ranks() != ranks {
                bail!(
                    "initial tensor has dims {:?} and ranks {:?}, expected {:?} and {ranks:?}",
                    tt.dims(),
                    tt.ranks(),
                    a.dims()
                );
            }
            Ok(if tt.is_left_orthogonal() { tt } else { tt.left_orthogonalize()? })
        }
    }
}

pub fn run_solver(
    solver: SolverKind,
    problem: &Problem,
    x0: &TtTensor,
    cfg: &SolverConfig,
    x_star: Option<&DenseTensor>,
) -> ttr_core::Result<SolverOutput> {
    let run = match solver {
        SolverKind::Psubgm => psubgm_run,
        SolverKind::Frsubgm => frsubgm_run,
    };
    run(&problem.ensemble, &problem.y, &problem.ranks, x0, cfg, x_star)
}

/// Whether an error is a solver abort (divergence or a failed retraction)
/// rather than a usage or input problem.
pub fn is_solver_abort(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<CoreError>(),
        Some(CoreError::Diverged { .. } | CoreError::Retraction { .. })
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverSummary {
    pub solver: SolverKind,
    pub lambda: f64,
    pub q: f64,
    pub iterations: usize,
    pub reached_target: bool,
    pub initial_rel_error: Option<f64>,
    pub final_rel_error: Option<f64>,
    pub final_objective: f64,
}

#[derive(Debug, Clone)]
pub struct RecoverArgs {
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub solver: SolverKind,
    pub schedule: StepSchedule,
    pub iters: usize,
    pub init: InitKind,
    pub x0: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub trace_every: usize,
    pub target_rel_error: f64,
    pub sigma_bar_mode: SigmaBarMode,
    pub track_factor_distance: bool,
    /// Hide the ground truth from the solver: no relative errors, no
    /// early stopping.
    pub blind: bool,
    pub storage: ttr_core::StorageMode,
}

pub const RESULT_FILE: &str = "result.ttf";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Runs `recover` and writes `result.ttf`, `trace.csv` and `summary.json`
/// into `args.out`. On a solver abort the partial trace is still written
/// before the error is returned.
pub fn recover(args: &RecoverArgs) -> Result<RecoverSummary> {
    let (bundle, problem) = load_bundle(&args.bundle, args.storage)?;
    let provided = match (args.init, &args.x0) {
        (InitKind::Provided, Some(p)) => Some(read_tt(p)?),
        (InitKind::Provided, None) => bail!("--init provided needs --x0"),
        (InitKind::Truncated, Some(_)) => bail!("--x0 conflicts with --init truncated"),
        (InitKind::Truncated, None) => None,
    };
    let alpha = args.alpha.unwrap_or(bundle.p_s);
    let x0 = initial_iterate(&problem.ensemble, &problem.y, &problem.ranks, alpha, provided)?;

    let mut cfg = SolverConfig::new(args.schedule, args.iters);
    cfg.trace_every = args.trace_every;
    cfg.target_rel_error = args.target_rel_error;
    cfg.sigma_bar_mode = args.sigma_bar_mode;
    cfg.track_factor_distance = args.track_factor_distance;
    let x_star = (!args.blind).then_some(&problem.x_star);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let out = match run_solver(args.solver, &problem, &x0, &cfg, x_star) {
        Ok(out) => out,
        Err(err) => {
            if let CoreError::Diverged { trace, .. } = &err {
                write_trace_csv(&args.out.join(TRACE_FILE), trace)?;
            }
            return Err(err.into());
        }
    };
    write_trace_csv(&args.out.join(TRACE_FILE), &out.trace)?;
    write_tt(&args.out.join(RESULT_FILE), &out.tt)?;
    let first = out.trace.first().expect("trace holds t = 0");
    let last = out.trace.last().expect("trace holds the final iterate");
    let summary = RecoverSummary {
        solver: args.solver,
        lambda: args.schedule.lambda,
        q: args.schedule.q,
        iterations: out.iterations,
        reached_target: out.reached_target,
        initial_rel_error: first.rel_error,
        final_rel_error: last.rel_error,
        final_objective: last.objective,
    };
    write_json(&args.out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

pub fn read_tt(path: &Path) -> Result<TtTensor> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(TtTensor::read_ttf(BufReader::new(f))?)
}

pub fn write_tt(path: &Path, tt: &TtTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    tt.write_ttf(&mut w)?;
    w.flush()?;
    Ok(())
}
