use nalgebra::DMatrix;

use crate::decompose::{spectral_summary, validate_ranks};
use crate::error::{Error, Result};
use crate::sensing::GaussianEnsemble;
use crate::tensor::DenseTensor;
use crate::tt::{Factor, TtTensor};

use super::config::{SigmaBarMode, SolverConfig};
use super::factor_grad::contract_factors;
use super::loss::evaluate;
use super::monitor::{all_finite, all_zero, check_start, Monitor};
use super::stiefel::{project_unchecked, retract, STIEFEL_TOL};
use super::trace::SolverOutput;

/// Resolves `σ̄` for the given mode.
pub fn resolve_sigma_bar(
    mode: SigmaBarMode,
    tt0: &TtTensor,
    ranks: &[usize],
    x_star: Option<&DenseTensor>,
) -> Result<f64> {
    match mode {
        SigmaBarMode::TrueValue => {
            let x = x_star.ok_or_else(|| Error::config("sigma_bar mode true_value needs the ground truth"))?;
            Ok(spectral_summary(x, ranks)?.sigma_max)
        }
        SigmaBarMode::FromInit => Ok(spectral_summary(&tt0.to_dense(), ranks)?.sigma_max),
        SigmaBarMode::UserOverride(v) => Ok(v),
    }
}

/// Factorized Riemannian subgradient method. Every factor's subgradient is
/// evaluated at the current point; factors `1..N−1` then take a tangent step
/// of size `μ_t/σ̄²` followed by the polar retraction, and factor `N` takes a
/// plain step of size `μ_t`.
pub fn frsubgm_run(
    a: &GaussianEnsemble,
    y: &[f64],
    ranks: &[usize],
    tt0: &TtTensor,
    cfg: &SolverConfig,
    x_star: Option<&DenseTensor>,
) -> Result<SolverOutput> {
    cfg.validate()?;
    validate_ranks(a.dims(), ranks)?;
    check_start(tt0, a.dims(), ranks)?;
    let residual = tt0.max_orthonormality_residual();
    if !(residual <= STIEFEL_TOL) {
        return Err(Error::NotOrthonormal { residual });
    }
    let sigma_bar = resolve_sigma_bar(cfg.sigma_bar_mode, tt0, ranks, x_star)?;
    if !(sigma_bar > 0.0 && sigma_bar.is_finite()) {
        return Err(Error::config(format!("sigma_bar = {sigma_bar} is not positive")));
    }
    let inv_sigma2 = 1.0 / (sigma_bar * sigma_bar);
    let mut monitor = Monitor::new(cfg, x_star, a.dims(), ranks)?;

    let n = tt0.order();
    let mut tt = TtTensor::from_parts_unchecked(tt0.factors().to_vec(), true);
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
        let mu = cfg.schedule.step(t);
        let grads = contract_factors(&tt, &eval.subgradient)?;
        let mut next: Vec<Factor> = Vec::with_capacity(n);
        for (i, (f, g)) in tt.factors().iter().zip(&grads).enumerate() {
            let l = f.left_unfolding();
            let step: DMatrix<f64> = if i + 1 < n {
                project_unchecked(l, g) * (mu * inv_sigma2)
            } else {
                g * mu
            };
            if all_zero(step.as_slice()) {
                next.push(f.clone());
                continue;
            }
            let moved = l - step;
            if !all_finite(moved.as_slice()) {
                return Err(monitor.diverged(t + 1, format!("factor {} has non-finite entries", i + 1)));
            }
            let updated = if i + 1 < n {
                match retract(&moved, i + 1) {
                    Err(Error::Config(e)) => {
                        return Err(monitor.diverged(t + 1, format!("retraction failed: {e}")))
                    }
                    other => other?,
                }
            } else {
                moved
            };
            next.push(f.with_unfolding(updated)?);
        }
        tt = TtTensor::from_parts_unchecked(next, true);
        t += 1;
    }
}
