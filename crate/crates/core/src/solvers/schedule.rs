use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::SQRT_2_OVER_PI;

/// Geometric step sizes `μ_t = λ qᵗ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub lambda: f64,
    pub q: f64,
}

impl StepSchedule {
    pub fn new(lambda: f64, q: f64) -> Result<Self> {
        let s = Self { lambda, q };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!(
                "initial step {} must be finite and nonnegative",
                self.lambda
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::config(format!("decay {} outside (0, 1)", self.q)));
        }
        Ok(())
    }

    /// `λ·q^t` through `powf`, not by repeated multiplication.
    pub fn step(&self, t: usize) -> f64 {
        self.lambda * self.q.powf(t as f64)
    }
}

/// Step schedule for the projected method from the RIP constant `delta`,
/// outlier fraction `p_s`, TT-SVD slack `c` and the initial error
/// `‖X⁽⁰⁾ − X⋆‖_F`:
///
/// `λ = a/(2b²)·‖X⁽⁰⁾ − X⋆‖_F`, `q = sqrt((1+c)(1 − 3a²/(4b²)))` with
/// `a = (1−2p_s)√(2/π) − δ`, `b = √(2/π) + δ`.
pub fn theoretical_schedule_psubgm(delta: f64, p_s: f64, c: f64, init_error: f64) -> Result<StepSchedule> {
    check_common(delta, p_s)?;
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::config(format!("slack c = {c} must be nonnegative")));
    }
    if !(init_error > 0.0 && init_error.is_finite()) {
        return Err(Error::config("initial error must be positive"));
    }
    let c_max = 3.0 * (1.0 - 2.0 * p_s).powi(2) / (1.0 + 12.0 * p_s - 12.0 * p_s * p_s);
    if c >= c_max {
        return Err(Error::config(format!(
            "violates c < 3(1-2p_s)^2/(1+12p_s-12p_s^2): c = {c}, bound {c_max}"
        )));
    }
    let root = (4.0 * c / (3.0 + 3.0 * c)).sqrt();
    let delta_max = (1.0 - 2.0 * p_s - root) / (1.0 + root) * SQRT_2_OVER_PI;
    if delta >= delta_max {
        return Err(Error::config(format!(
            "violates delta < (1-2p_s-sqrt(4c/(3+3c)))/(1+sqrt(4c/(3+3c)))*sqrt(2/pi): \
             delta = {delta}, bound {delta_max}"
        )));
    }
    let a = (1.0 - 2.0 * p_s) * SQRT_2_OVER_PI - delta;
    let b = SQRT_2_OVER_PI + delta;
    let lambda = a / (2.0 * b * b) * init_error;
    let q = ((1.0 + c) * (1.0 - 3.0 * a * a / (4.0 * b * b))).sqrt();
    finish(lambda, q)
}

/// Step schedule for the factorized method:
///
/// `λ = a·dist₀ / (sqrt(2S)(9N−5) b² κ)`,
/// `q = sqrt(1 − a² / (8S(9N−5) b² κ²))`, with `S = N + 1 + Σ_{i=2}^{N−1} r_i`
/// and `a`, `b` as in [`theoretical_schedule_psubgm`].
pub fn theoretical_schedule_frsubgm(
    delta: f64,
    p_s: f64,
    order: usize,
    ranks: &[usize],
    kappa: f64,
    init_dist: f64,
) -> Result<StepSchedule> {
    check_common(delta, p_s)?;
    if order < 2 || ranks.len() != order - 1 {
        return Err(Error::config(format!(
            "order {order} needs {} ranks, got {}",
            order.saturating_sub(1),
            ranks.len()
        )));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::config(format!("condition number {kappa} must be finite and >= 1")));
    }
    if !(init_dist > 0.0 && init_dist.is_finite()) {
        return Err(Error::config("initial factor distance must be positive"));
    }
    let delta_max = (1.0 - 2.0 * p_s) * SQRT_2_OVER_PI;
    if delta > delta_max {
        return Err(Error::config(format!(
            "violates delta <= (1-2p_s)*sqrt(2/pi): delta = {delta}, bound {delta_max}"
        )));
    }
    let n = order as f64;
    let s = n + 1.0 + ranks[1..].iter().map(|&r| r as f64).sum::<f64>();
    let a = delta_max - delta;
    let b = SQRT_2_OVER_PI + delta;
    let nine = 9.0 * n - 5.0;
    let lambda = a * init_dist / ((2.0 * s).sqrt() * nine * b * b * kappa);
    let q = (1.0 - a * a / (8.0 * s * nine * b * b * kappa * kappa)).sqrt();
    finish(lambda, q)
}

fn check_common(delta: f64, p_s: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p_s) {
        return Err(Error::config(format!("outlier fraction {p_s} outside [0, 0.5)")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::config(format!("RIP constant {delta} must be nonnegative")));
    }
    Ok(())
}

fn finish(lambda: f64, q: f64) -> Result<StepSchedule> {
    if !(q < 1.0) {
        return Err(Error::config(format!("contraction factor q = {q} is not below 1")));
    }
    if !(lambda > 0.0) {
        return Err(Error::config(format!("initial step {lambda} is not positive")));
    }
    StepSchedule::new(lambda, q)
}
