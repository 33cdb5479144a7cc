use crate::error::{Error, Result};
use crate::sensing::GaussianEnsemble;
use crate::tensor::DenseTensor;

/// Three-valued sign with `sign(0) = 0`.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_len(a: &GaussianEnsemble, y: &[f64]) -> Result<()> {
    if y.len() != a.m() {
        return Err(Error::shape(format!(
            "{} measurements for an ensemble of {}",
            y.len(),
            a.m()
        )));
    }
    Ok(())
}

/// Residual `A(x) − y`.
pub fn residuals(a: &GaussianEnsemble, x: &DenseTensor, y: &[f64]) -> Result<Vec<f64>> {
    check_len(a, y)?;
    Ok(a.apply(x)?.iter().zip(y).map(|(v, yk)| v - yk).collect())
}

/// `f(x) = (1/m)‖A(x) − y‖₁`.
pub fn loss_l1(a: &GaussianEnsemble, x: &DenseTensor, y: &[f64]) -> Result<f64> {
    Ok(mean_abs(&residuals(a, x, y)?))
}

pub(crate) fn mean_abs(r: &[f64]) -> f64 {
    r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64
}

pub fn residual_signs(a: &GaussianEnsemble, x: &DenseTensor, y: &[f64]) -> Result<Vec<f64>> {
    Ok(residuals(a, x, y)?.into_iter().map(sign).collect())
}

/// Objective, residuals and the sign subgradient at one point, from a single
/// pass over the ensemble.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub subgradient: DenseTensor,
}

pub fn evaluate(a: &GaussianEnsemble, x: &DenseTensor, y: &[f64]) -> Result<Evaluation> {
    check_len(a, y)?;
    let inv_m = 1.0 / a.m() as f64;
    let (values, subgradient) = a.apply_and_accumulate(x, |k, v| sign(v - y[k]) * inv_m)?;
    let residuals: Vec<f64> = values.iter().zip(y).map(|(v, yk)| v - yk).collect();
    Ok(Evaluation {
        objective: mean_abs(&residuals),
        residuals,
        subgradient,
    })
}

/// `(1/m) Σ_k sign(⟨A_k, x⟩ − y_k) A_k`.
pub fn full_subgradient(a: &GaussianEnsemble, x: &DenseTensor, y: &[f64]) -> Result<DenseTensor> {
    Ok(evaluate(a, x, y)?.subgradient)
}
