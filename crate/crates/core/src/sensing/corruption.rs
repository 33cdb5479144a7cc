use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::sensing::GaussianEnsemble;
use crate::tensor::DenseTensor;

/// Outlier variance used when none is configured.
pub const DEFAULT_OUTLIER_VARIANCE: f64 = 10.0;

/// Sparse outlier model: `round(p_s m)` entries chosen uniformly without
/// replacement receive additive `Normal(0, outlier_sigma2)` corruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionModel {
    pub p_s: f64,
    /// Variance (not standard deviation) of the outlier law.
    pub outlier_sigma2: f64,
    pub support_seed: u64,
    pub value_seed: u64,
}

impl CorruptionModel {
    pub fn new(p_s: f64, support_seed: u64, value_seed: u64) -> Self {
        Self {
            p_s,
            outlier_sigma2: DEFAULT_OUTLIER_VARIANCE,
            support_seed,
            value_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.p_s) {
            return Err(Error::config(format!(
                "outlier fraction {} outside [0, 0.5]",
                self.p_s
            )));
        }
        if !(self.outlier_sigma2 >= 0.0 && self.outlier_sigma2.is_finite()) {
            return Err(Error::config(format!(
                "outlier variance {} must be finite and nonnegative",
                self.outlier_sigma2
            )));
        }
        Ok(())
    }

    /// `|S| = round(p_s m)`, halves rounded up.
    pub fn support_size(&self, m: usize) -> usize {
        round_half_up(self.p_s * m as f64)
    }
}

/// Rounds half up, treating values within 1e-9 of a half as exact halves so
/// products like `0.35 * 10` land where intended.
pub fn round_half_up(v: f64) -> usize {
    (v + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Ceiling that ignores floating error below 1e-9 (`0.3 * 10` is 3, not 4).
pub fn ceil_snapped(v: f64) -> usize {
    (v - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub y: Vec<f64>,
    /// Outlier positions, ascending. Diagnostics only.
    pub support: Vec<usize>,
}

pub fn corrupt(y_clean: &[f64], model: &CorruptionModel) -> Result<Measurements> {
    model.validate()?;
    let m = y_clean.len();
    let count = model.support_size(m);
    let mut support = if count == 0 {
        Vec::new()
    } else {
        sample(&mut rng_from_seed(model.support_seed), m, count).into_vec()
    };
    support.sort_unstable();

    let mut y = y_clean.to_vec();
    if !support.is_empty() {
        let law = Normal::new(0.0, model.outlier_sigma2.sqrt())
            .map_err(|e| Error::config(format!("outlier law: {e}")))?;
        let mut rng = rng_from_seed(model.value_seed);
        for &k in &support {
            y[k] += law.sample(&mut rng);
        }
    }
    Ok(Measurements { y, support })
}

/// `y = A(x_star) + s`.
pub fn measure(a: &GaussianEnsemble, x_star: &DenseTensor, model: &CorruptionModel) -> Result<Measurements> {
    let clean = a.apply(x_star)?;
    corrupt(&clean, model)
}
