use crate::decompose::{tt_svd, validate_ranks};
use crate::error::Result;
use crate::sensing::GaussianEnsemble;
use crate::tensor::DenseTensor;
use crate::tt::TtTensor;

use super::config::SolverConfig;
use super::loss::evaluate;
use super::monitor::{all_finite, all_zero, check_start, Monitor};
use super::trace::SolverOutput;

/// Projected subgradient method:
/// `X⁽ᵗ⁺¹⁾ = tt_svd(X⁽ᵗ⁾ − μ_t ∂f(X⁽ᵗ⁾), ranks)`.
///
/// An update that leaves the dense iterate bit-for-bit unchanged (zero
/// subgradient or zero step) keeps the current factors rather than
/// re-decomposing them.
pub fn psubgm_run(
    a: &GaussianEnsemble,
    y: &[f64],
    ranks: &[usize],
    x0: &TtTensor,
    cfg: &SolverConfig,
    x_star: Option<&DenseTensor>,
) -> Result<SolverOutput> {
    cfg.validate()?;
    validate_ranks(a.dims(), ranks)?;
    check_start(x0, a.dims(), ranks)?;
    let mut monitor = Monitor::new(cfg, x_star, a.dims(), ranks)?;

    let mut tt = x0.clone();
    let mut t = 0;
    loop {
        let x = tt.to_dense();
        let eval = evaluate(a, &x, y)?;
        let reached = monitor.observe(t, &tt, &x, eval.objective)?;
        if reached || t == cfg.max_iters {
            return Ok(SolverOutput {
                tt,
                trace: monitor.finish(),
                iterations: t,
                reached_target: reached,
            });
        }
        let step = eval.subgradient.scaled(cfg.schedule.step(t));
        if !all_zero(step.data()) {
            let next = x.sub(&step)?;
            if !all_finite(next.data()) {
                return Err(monitor.diverged(t + 1, "iterate has non-finite entries"));
            }
            tt = match tt_svd(&next, ranks) {
                Ok(svd) => svd.tt,
                Err(e) => return Err(monitor.diverged(t + 1, format!("projection failed: {e}"))),
            };
        }
        t += 1;
    }
}
