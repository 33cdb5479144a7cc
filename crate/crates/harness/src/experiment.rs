//! Parameter sweeps with Monte-Carlo trials, resumable through a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ttr_core::decompose::validate_ranks;
use ttr_core::rng::derive_seed;
use ttr_core::sensing::{StorageMode, DEFAULT_OUTLIER_VARIANCE};
use ttr_core::solvers::{SigmaBarMode, SolverConfig, StepSchedule, TraceRecord};

use crate::problem::{generate, ProblemConfig};
use crate::recover::{initial_iterate, run_solver, SolverKind};
use crate::trace_io::write_trace_csv;
use crate::{read_json, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
const MANIFEST_FORMAT: &str = "TTR-MANIFEST1";

/// One solver of the sweep with optional step parameters of its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSweep {
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Tensor orders.
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    /// Uniform TT rank.
    pub r: Vec<usize>,
    pub m: Vec<usize>,
    pub p_s: Vec<f64>,
    /// Step parameters used by solvers that do not list their own.
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub solvers: Vec<SolverSweep>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Success means a final relative squared error at or below this.
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    pub master_seed: u64,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    /// Truncation fraction of the spectral initialization; the cell's
    /// `p_s` when absent.
    #[serde(default)]
    pub init_alpha: Option<f64>,
    #[serde(default)]
    pub sigma_bar_mode: SigmaBarMode,
    #[serde(default = "default_sigma2")]
    pub outlier_sigma2: f64,
    #[serde(default = "default_storage")]
    pub storage: StorageMode,
}

fn default_trials() -> usize {
    20
}
fn default_threshold() -> f64 {
    1e-5
}
fn default_iters() -> usize {
    1000
}
fn default_trace_every() -> usize {
    10
}
fn default_sigma2() -> f64 {
    DEFAULT_OUTLIER_VARIANCE
}
fn default_storage() -> StorageMode {
    StorageMode::Auto
}

/// Parameters of one cell of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    /// Index of the `(n, d, r, m, p_s)` instance family; trials of cells that
    /// share it run on identical instances.
    pub problem_index: usize,
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub m: usize,
    pub p_s: f64,
    pub solver: SolverKind,
    pub lambda: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTracePoint {
    pub t: usize,
    pub objective: f64,
    pub rel_error: f64,
    pub mu_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Trials stopped by a solver abort; they count as failures and are left
    /// out of the mean trace.
    pub aborted: usize,
    /// `‖X⁽⁰⁾ − X⋆‖_F / ‖X⋆‖_F` per trial.
    pub initial_rel_errors: Vec<f64>,
    /// Final relative error per trial, `None` when the trial aborted.
    pub final_rel_errors: Vec<Option<f64>>,
    pub mean_trace: Vec<MeanTracePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub result: CellResult,
    pub wall_time_s: WallStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub fingerprint: String,
    pub entries: Vec<ManifestEntry>,
    /// SHA-256 of the serialized entries.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub fingerprint: String,
    pub success_threshold: f64,
    pub cells: Vec<CellResult>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop after computing this many new cells (simulates an interruption).
    pub max_new_cells: Option<usize>,
}

/// What a call to [`run_experiment`] achieved.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub computed: usize,
    pub skipped: usize,
    /// `Some` once every cell is complete.
    pub summary: Option<ExperimentSummary>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, len) in [
            ("n", self.n.len()),
            ("d", self.d.len()),
            ("r", self.r.len()),
            ("m", self.m.len()),
            ("p_s", self.p_s.len()),
            ("solvers", self.solvers.len()),
        ] {
            ensure!(len > 0, "sweep axis `{name}` is empty");
        }
        ensure!(self.trials > 0, "trials must be at least 1");
        ensure!(self.trace_every > 0, "trace_every must be at least 1");
        ensure!(
            self.success_threshold >= 0.0 && self.success_threshold.is_finite(),
            "success_threshold must be finite and nonnegative"
        );
        for &p in &self.p_s {
            ensure!((0.0..=0.5).contains(&p), "p_s = {p} outside [0, 0.5]");
        }
        if let Some(a) = self.init_alpha {
            ensure!((0.0..1.0).contains(&a), "init_alpha = {a} outside [0, 1)");
        }
        for &n in &self.n {
            for &d in &self.d {
                for &r in &self.r {
                    validate_ranks(&vec![d; n], &vec![r; n.saturating_sub(1)])
                        .with_context(|| format!("n = {n}, d = {d}, r = {r}"))?;
                }
            }
        }
        for s in &self.solvers {
            let (lambdas, qs) = self.steps(s);
            ensure!(
                !lambdas.is_empty() && !qs.is_empty(),
                "solver {} has no lambda or q values",
                s.solver.name()
            );
            for &l in lambdas {
                for &q in qs {
                    StepSchedule::new(l, q)?;
                }
            }
        }
        Ok(())
    }

    fn steps<'a>(&'a self, s: &'a SolverSweep) -> (&'a [f64], &'a [f64]) {
        (
            s.lambda.as_deref().unwrap_or(&self.lambda),
            s.q.as_deref().unwrap_or(&self.q),
        )
    }

    /// Cells in sweep order: `n, d, r, m, p_s`, then solver, `λ`, `q`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        let mut problem_index = 0;
        for &n in &self.n {
            for &d in &self.d {
                for &r in &self.r {
                    for &m in &self.m {
                        for &p_s in &self.p_s {
                            for s in &self.solvers {
                                let (lambdas, qs) = self.steps(s);
                                for &lambda in lambdas {
                                    for &q in qs {
                                        cells.push(Cell {
                                            index: cells.len(),
                                            problem_index,
                                            n,
                                            d,
                                            r,
                                            m,
                                            p_s,
                                            solver: s.solver,
                                            lambda,
                                            q,
                                        });
                                    }
                                }
                            }
                            problem_index += 1;
                        }
                    }
                }
            }
        }
        cells
    }

    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("spec serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Instance configuration of trial `trial` for the given cell.
    pub fn problem_config(&self, cell: &Cell, trial: usize) -> ProblemConfig {
        let seed = derive_seed(self.master_seed, &[cell.problem_index as u64, trial as u64]);
        let mut cfg = ProblemConfig::new(vec![cell.d; cell.n], vec![cell.r; cell.n - 1], cell.m, cell.p_s, seed);
        cfg.outlier_sigma2 = self.outlier_sigma2;
        cfg.storage = self.storage;
        cfg
    }
}

struct TrialOutcome {
    initial: f64,
    last: Option<f64>,
    trace: Option<Vec<TraceRecord>>,
    seconds: f64,
}

fn run_trial(spec: &ExperimentSpec, cell: &Cell, trial: usize) -> Result<TrialOutcome> {
    let start = Instant::now();
    let problem = generate(&spec.problem_config(cell, trial))?;
    let alpha = spec.init_alpha.unwrap_or(cell.p_s);
    let x0 = initial_iterate(&problem.ensemble, &problem.y, &problem.ranks, alpha, None)?;
    let initial = x0.to_dense().distance(&problem.x_star)? / problem.x_star.frobenius_norm();
    let mut cfg = SolverConfig::new(StepSchedule::new(cell.lambda, cell.q)?, spec.max_iters);
    cfg.trace_every = spec.trace_every;
    cfg.sigma_bar_mode = spec.sigma_bar_mode;
    let (last, trace) = match run_solver(cell.solver, &problem, &x0, &cfg, Some(&problem.x_star)) {
        Ok(out) => (out.trace.last().and_then(|r| r.rel_error), Some(out.trace)),
        Err(ttr_core::Error::Diverged { .. } | ttr_core::Error::Retraction { .. }) => (None, None),
        Err(e) => return Err(e.into()),
    };
    Ok(TrialOutcome {
        initial,
        last,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn mean_trace(traces: &[&Vec<TraceRecord>]) -> Vec<MeanTracePoint> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let k = traces.len() as f64;
    (0..first.len())
        .map(|j| {
            let recs: Vec<&TraceRecord> = traces.iter().map(|t| &t[j]).collect();
            MeanTracePoint {
                t: recs[0].t,
                objective: recs.iter().map(|r| r.objective).sum::<f64>() / k,
                rel_error: recs.iter().map(|r| r.rel_error.unwrap_or(f64::NAN)).sum::<f64>() / k,
                mu_t: recs[0].mu_t,
            }
        })
        .collect()
}

/// Runs all trials of one cell, in parallel, and reduces them in trial order.
pub fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> Result<ManifestEntry> {
    let outcomes: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| run_trial(spec, cell, trial))
        .collect::<Result<_>>()?;
    let threshold = spec.success_threshold;
    let successes = outcomes
        .iter()
        .filter(|o| o.last.is_some_and(|e| e * e <= threshold))
        .count();
    let traces: Vec<&Vec<TraceRecord>> = outcomes.iter().filter_map(|o| o.trace.as_ref()).collect();
    let secs: Vec<f64> = outcomes.iter().map(|o| o.seconds).collect();
    let result = CellResult {
        cell: cell.clone(),
        trials: spec.trials,
        successes,
        success_rate: successes as f64 / spec.trials as f64,
        aborted: outcomes.iter().filter(|o| o.trace.is_none()).count(),
        initial_rel_errors: outcomes.iter().map(|o| o.initial).collect(),
        final_rel_errors: outcomes.iter().map(|o| o.last).collect(),
        mean_trace: mean_trace(&traces),
    };
    Ok(ManifestEntry {
        result,
        wall_time_s: WallStats {
            mean: secs.iter().sum::<f64>() / secs.len() as f64,
            min: secs.iter().copied().fold(f64::INFINITY, f64::min),
            max: secs.iter().copied().fold(0.0, f64::max),
        },
    })
}

fn entries_checksum(entries: &[ManifestEntry]) -> String {
    let text = serde_json::to_string(entries).expect("entries serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn load_manifest(path: &Path, fingerprint: &str) -> Result<Manifest> {
    let manifest: Manifest = read_json(path).context("manifest is corrupt; refusing to resume")?;
    if manifest.format != MANIFEST_FORMAT {
        bail!("{} is not a results manifest; refusing to resume", path.display());
    }
    if manifest.checksum != entries_checksum(&manifest.entries) {
        bail!("manifest checksum mismatch; refusing to resume");
    }
    if manifest.fingerprint != fingerprint {
        bail!("manifest belongs to a different experiment spec; refusing to resume");
    }
    Ok(manifest)
}

fn save_manifest(path: &Path, manifest: &mut Manifest) -> Result<()> {
    manifest.checksum = entries_checksum(&manifest.entries);
    let tmp = path.with_extension("json.tmp");
    write_json(&tmp, manifest)?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))
}

pub fn cell_csv_name(index: usize) -> String {
    format!("cell_{index:04}.csv")
}

fn write_cell_csv(dir: &Path, result: &CellResult) -> Result<PathBuf> {
    let path = dir.join(cell_csv_name(result.cell.index));
    let trace: Vec<TraceRecord> = result
        .mean_trace
        .iter()
        .map(|p| TraceRecord {
            t: p.t,
            objective: p.objective,
            rel_error: Some(p.rel_error),
            mu_t: p.mu_t,
            factor_dist2: None,
        })
        .collect();
    write_trace_csv(&path, &trace)?;
    Ok(path)
}

/// Runs every cell not yet recorded in `out/manifest.json`, writing one mean
/// trace CSV per cell and, once all cells are done, `summary.json`.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, opts: RunOptions) -> Result<RunReport> {
    spec.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let fingerprint = spec.fingerprint();
    let manifest_path = out.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.exists() {
        load_manifest(&manifest_path, &fingerprint)?
    } else {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            fingerprint: fingerprint.clone(),
            entries: Vec::new(),
            checksum: String::new(),
        }
    };

    let cells = spec.cells();
    let mut computed = 0;
    let mut skipped = 0;
    for cell in &cells {
        if manifest.entries.iter().any(|e| e.result.cell.index == cell.index) {
            skipped += 1;
            continue;
        }
        if opts.max_new_cells.is_some_and(|k| computed >= k) {
            return Ok(RunReport {
                computed,
                skipped,
                summary: None,
            });
        }
        let entry = run_cell(spec, cell)?;
        write_cell_csv(out, &entry.result)?;
        manifest.entries.push(entry);
        save_manifest(&manifest_path, &mut manifest)?;
        computed += 1;
    }

    let mut results: Vec<CellResult> = manifest.entries.iter().map(|e| e.result.clone()).collect();
    results.sort_by_key(|r| r.cell.index);
    for r in &results {
        write_cell_csv(out, r)?;
    }
    let summary = ExperimentSummary {
        fingerprint,
        success_threshold: spec.success_threshold,
        cells: results,
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(RunReport {
        computed,
        skipped,
        summary: Some(summary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ExperimentSpec {
        serde_json::from_str(
            r#"{"n":[3],"d":[3],"r":[2],"m":[40,60],"p_s":[0.1],
                "lambda":[0.5],"q":[0.9],
                "solvers":[{"solver":"psubgm"},{"solver":"frsubgm","q":[0.91,0.93]}],
                "trials":2,"max_iters":30,"master_seed":5}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_cell_order() {
        let s = spec();
        assert_eq!(s.success_threshold, 1e-5);
        assert_eq!(s.trace_every, 10);
        let cells = s.cells();
        assert_eq!(cells.len(), 6);
        let tags: Vec<(usize, usize, &str, f64)> = cells
            .iter()
            .map(|c| (c.problem_index, c.m, c.solver.name(), c.q))
            .collect();
        assert_eq!(
            tags,
            vec![
                (0, 40, "psubgm", 0.9),
                (0, 40, "frsubgm", 0.91),
                (0, 40, "frsubgm", 0.93),
                (1, 60, "psubgm", 0.9),
                (1, 60, "frsubgm", 0.91),
                (1, 60, "frsubgm", 0.93),
            ]
        );
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec();
        s.r = vec![4];
        assert!(s.validate().is_err());
        let mut s = spec();
        s.trials = 0;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.solvers[0].q = Some(vec![1.0]);
        assert!(s.validate().is_err());
        let mut s = spec();
        s.p_s = vec![0.6];
        assert!(s.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_the_spec() {
        let a = spec();
        let mut b = spec();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.master_seed = 6;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn mean_trace_averages_pointwise() {
        let rec = |t, e| TraceRecord {
            t,
            objective: e,
            rel_error: Some(e),
            mu_t: 1.0,
            factor_dist2: None,
        };
        let a = vec![rec(0, 1.0), rec(10, 0.5)];
        let b = vec![rec(0, 3.0), rec(10, 0.1)];
        let m = mean_trace(&[&a, &b]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].rel_error, 2.0);
        assert!((m[1].rel_error - 0.3).abs() < 1e-15);
    }
}
