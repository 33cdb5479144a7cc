use crate::analysis::factor_distance;
use crate::decompose::{spectral_summary, tt_svd};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use crate::tt::TtTensor;

use super::config::SolverConfig;
use super::trace::TraceRecord;

/// Telemetry and stopping logic shared by both solvers.
pub(crate) struct Monitor<'a> {
    cfg: &'a SolverConfig,
    truth: Option<Truth<'a>>,
    trace: Vec<TraceRecord>,
}

struct Truth<'a> {
    x: &'a DenseTensor,
    norm: f64,
    /// Left-orthogonal factors of the truth and its `σ̄`, when the factor
    /// distance is tracked.
    factors: Option<(TtTensor, f64)>,
}

impl<'a> Monitor<'a> {
    pub fn new(
        cfg: &'a SolverConfig,
        x_star: Option<&'a DenseTensor>,
        dims: &[usize],
        ranks: &[usize],
    ) -> Result<Self> {
        let truth = match x_star {
            None => None,
            Some(x) => {
                if x.dims() != dims {
                    return Err(Error::shape(format!(
                        "ground truth dims {:?} differ from {:?}",
                        x.dims(),
                        dims
                    )));
                }
                let norm = x.frobenius_norm();
                if !(norm > 0.0) {
                    return Err(Error::config("ground truth has zero norm"));
                }
                let factors = if cfg.track_factor_distance {
                    let sigma_bar = spectral_summary(x, ranks)?.sigma_max;
                    Some((tt_svd(x, ranks)?.tt, sigma_bar))
                } else {
                    None
                };
                Some(Truth { x, norm, factors })
            }
        };
        Ok(Self {
            cfg,
            truth,
            trace: Vec::new(),
        })
    }

    /// Records iterate `t` when due and reports whether the target was met.
    /// A non-finite objective aborts with the trace so far.
    pub fn observe(&mut self, t: usize, tt: &TtTensor, x: &DenseTensor, objective: f64) -> Result<bool> {
        let rel_error = match &self.truth {
            Some(truth) => Some(x.distance(truth.x)? / truth.norm),
            None => None,
        };
        let reached = self.cfg.target_rel_error > 0.0
            && rel_error.is_some_and(|e| e <= self.cfg.target_rel_error);
        let finite = objective.is_finite();
        let due = t % self.cfg.trace_every == 0 || t == self.cfg.max_iters || reached || !finite;
        if due {
            let factor_dist2 = match self.truth.as_ref().and_then(|tr| tr.factors.as_ref()) {
                Some((star, sigma_bar)) if finite => {
                    let tt = if tt.is_left_orthogonal() {
                        tt.clone()
                    } else {
                        tt.left_orthogonalize()?
                    };
                    Some(factor_distance(&tt, star, *sigma_bar)?.dist2)
                }
                _ => None,
            };
            self.trace.push(TraceRecord {
                t,
                objective,
                rel_error,
                mu_t: self.cfg.schedule.step(t),
                factor_dist2,
            });
        }
        if !finite {
            return Err(self.diverged(t, format!("objective became {objective}")));
        }
        Ok(reached)
    }

    pub fn diverged(&self, t: usize, reason: impl Into<String>) -> Error {
        Error::Diverged {
            t,
            reason: reason.into(),
            trace: self.trace.clone(),
        }
    }

    pub fn finish(self) -> Vec<TraceRecord> {
        self.trace
    }
}

pub(crate) fn all_zero(values: &[f64]) -> bool {
    values.iter().all(|&v| v == 0.0)
}

pub(crate) fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

pub(crate) fn check_start(tt: &TtTensor, dims: &[usize], ranks: &[usize]) -> Result<()> {
    if tt.dims() != dims {
        return Err(Error::shape(format!(
            "initial iterate dims {:?} differ from {:?}",
            tt.dims(),
            dims
        )));
    }
    if tt.ranks() != ranks {
        return Err(Error::rank(format!(
            "initial iterate ranks {:?} differ from target {:?}",
            tt.ranks(),
            ranks
        )));
    }
    Ok(())
}
