use rand::Rng;
use serde::Serialize;

use crate::decompose::random_tt;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sensing::GaussianEnsemble;
use crate::solvers::loss_l1;
use crate::tensor::DenseTensor;

/// `E|g|` for a standard normal `g`.
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeStats {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Largest `|sample − reference|`.
    pub max_deviation: f64,
    pub reference: f64,
    pub skipped: usize,
}

impl ProbeStats {
    pub(crate) fn from_samples(samples: Vec<f64>, reference: f64, skipped: usize) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_deviation = samples
            .iter()
            .map(|s| (s - reference).abs())
            .fold(0.0, f64::max);
        Self {
            samples,
            mean,
            min,
            max,
            max_deviation,
            reference,
            skipped,
        }
    }
}

/// Samples `(1/m)‖A(X)‖₁` over unit-norm random TT tensors of the given ranks.
/// Sample `j` uses `random_tt` with seed `derive_seed(seed, [j])`.
pub fn rip_probe(a: &GaussianEnsemble, ranks: &[usize], trials: usize, seed: u64) -> Result<ProbeStats> {
    if trials == 0 {
        return Err(Error::config("probe needs at least one trial"));
    }
    let m = a.m() as f64;
    let mut samples = Vec::with_capacity(trials);
    for j in 0..trials {
        let x = random_tt(a.dims(), ranks, derive_seed(seed, &[j as u64]))?.to_dense();
        let ax = a.apply(&x)?;
        samples.push(ax.iter().map(|v| v.abs()).sum::<f64>() / m);
    }
    Ok(ProbeStats::from_samples(samples, SQRT_2_OVER_PI, 0))
}

/// `[f(X) − f(X⋆)] / ‖X − X⋆‖_F`, or `None` when `X = X⋆`.
pub fn sharpness_ratio(
    a: &GaussianEnsemble,
    y: &[f64],
    x: &DenseTensor,
    x_star: &DenseTensor,
) -> Result<Option<f64>> {
    let dist = x.distance(x_star)?;
    if dist == 0.0 {
        return Ok(None);
    }
    Ok(Some((loss_l1(a, x, y)? - loss_l1(a, x_star, y)?) / dist))
}

/// Samples the sharpness ratio at `X = c·X_j`, with `X_j` a unit-norm random
/// TT tensor and `c` uniform on `[0.25, 2)`. The reference reported is
/// `(1 − 2p_s)·sqrt(2/π)`, the population sharpness constant.
pub fn sharpness_probe(
    a: &GaussianEnsemble,
    y: &[f64],
    x_star: &DenseTensor,
    ranks: &[usize],
    p_s: f64,
    trials: usize,
    seed: u64,
) -> Result<ProbeStats> {
    if trials == 0 {
        return Err(Error::config("probe needs at least one trial"));
    }
    let mut samples = Vec::with_capacity(trials);
    let mut skipped = 0;
    for j in 0..trials {
        let s = derive_seed(seed, &[j as u64]);
        let scale: f64 = rng_from_seed(derive_seed(s, &[1])).random_range(0.25..2.0);
        let x = random_tt(a.dims(), ranks, s)?.to_dense().scaled(scale);
        match sharpness_ratio(a, y, &x, x_star)? {
            Some(r) => samples.push(r),
            None => skipped += 1,
        }
    }
    Ok(ProbeStats::from_samples(
        samples,
        (1.0 - 2.0 * p_s) * SQRT_2_OVER_PI,
        skipped,
    ))
}
