use nalgebra::DMatrix;
use serde::Serialize;

use crate::decompose::spectral_summary;
use crate::error::{Error, Result};
use crate::linalg::SortedSvd;
use crate::solvers::STIEFEL_TOL;
use crate::tt::{Factor, TtTensor};

/// Relative improvement below which the alternating sweeps stop.
pub const SWEEP_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorDistanceReport {
    pub dist2: f64,
    /// `R_1, …, R_{N−1}`.
    pub rotations: Vec<DMatrix<f64>>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Serialized form of a distance evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub dist2: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub lemma5_lower_ok: bool,
    pub lemma5_upper_ok: bool,
}

/// Factor `i` of `star` rotated by its neighbouring gauges:
/// slices `R_{i−1}ᵀ X⋆_i(s) R_i`, with `R_0 = R_N = 1`.
pub fn rotated_factor(star: &Factor, left: &DMatrix<f64>, right: &DMatrix<f64>) -> Factor {
    star.left_multiplied(&left.transpose()).right_multiplied(right)
}

struct Problem<'a> {
    x: &'a [Factor],
    star: &'a [Factor],
    weights: Vec<f64>,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.x.len()
    }

    /// `rot` has `N + 1` entries with 1x1 identities at both ends.
    fn objective(&self, rot: &[DMatrix<f64>]) -> f64 {
        (0..self.n())
            .map(|i| {
                let r = rotated_factor(&self.star[i], &rot[i], &rot[i + 1]);
                self.weights[i] * (self.x[i].left_unfolding() - r.left_unfolding()).norm_squared()
            })
            .sum()
    }

    /// Cross term of cut `k` coming from factor `k−1`, where `R_k` rotates
    /// on the right: `Σ_s X⋆(s)ᵀ R_{k−1} X(s)`.
    fn left_term(&self, rot: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
        let i = k - 1;
        let shifted = self.x[i].left_multiplied(&rot[i]);
        self.star[i].left_unfolding().transpose() * shifted.left_unfolding() * self.weights[i]
    }

    /// Cross term of cut `k` coming from factor `k`, where `R_k` rotates on
    /// the left: `Σ_s X⋆(s) R_{k+1} X(s)ᵀ`.
    fn right_term(&self, rot: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
        let (x, star) = (&self.x[k], &self.star[k]);
        let mut acc = DMatrix::zeros(star.r_left(), x.r_left());
        for s in 0..x.dim() {
            acc += star.slice(s) * &rot[k + 1] * x.slice(s).transpose();
        }
        acc * self.weights[k]
    }

    fn solve(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let svd = SortedSvd::new(m)?;
        Ok(&svd.u * &svd.v_t)
    }

    fn greedy(&self) -> Result<Vec<DMatrix<f64>>> {
        let mut rot = self.identity();
        for k in 1..self.n() {
            rot[k] = Self::solve(&self.left_term(&rot, k))?;
        }
        Ok(rot)
    }

    fn identity(&self) -> Vec<DMatrix<f64>> {
        let mut rot = Vec::with_capacity(self.n() + 1);
        rot.push(DMatrix::identity(1, 1));
        for f in &self.x[..self.n() - 1] {
            rot.push(DMatrix::identity(f.r_right(), f.r_right()));
        }
        rot.push(DMatrix::identity(1, 1));
        rot
    }

    fn alternate(&self, mut rot: Vec<DMatrix<f64>>) -> Result<FactorDistanceReport> {
        let mut value = self.objective(&rot);
        let mut sweeps = 0;
        let mut converged = value == 0.0;
        while !converged && sweeps < MAX_SWEEPS {
            for k in 1..self.n() {
                let m = self.left_term(&rot, k) + self.right_term(&rot, k);
                rot[k] = Self::solve(&m)?;
            }
            sweeps += 1;
            let next = self.objective(&rot);
            converged = next == 0.0 || (value - next) < SWEEP_TOL * value;
            value = next;
        }
        let n = self.n();
        Ok(FactorDistanceReport {
            dist2: value,
            rotations: rot[1..n].to_vec(),
            converged,
            sweeps,
        })
    }
}

/// `min_R Σ_{i<N} σ̄² ‖L(X_i) − L_R(X⋆_i)‖_F² + ‖L(X_N) − L_R(X⋆_N)‖₂²`,
/// approximated by alternating orthogonal Procrustes solves, once from
/// `R_i = I` and once from a greedy left-to-right sweep; the smaller value
/// is returned.
pub fn factor_distance(tt: &TtTensor, tt_star: &TtTensor, sigma_bar: f64) -> Result<FactorDistanceReport> {
    if tt.dims() != tt_star.dims() {
        return Err(Error::shape(format!(
            "dims {:?} and {:?} differ",
            tt.dims(),
            tt_star.dims()
        )));
    }
    if tt.ranks() != tt_star.ranks() {
        return Err(Error::rank(format!(
            "ranks {:?} and {:?} differ",
            tt.ranks(),
            tt_star.ranks()
        )));
    }
    for t in [tt, tt_star] {
        let residual = t.max_orthonormality_residual();
        if !(residual <= STIEFEL_TOL) {
            return Err(Error::NotOrthonormal { residual });
        }
    }
    if !(sigma_bar > 0.0 && sigma_bar.is_finite()) {
        return Err(Error::config(format!("sigma_bar = {sigma_bar} must be positive")));
    }
    let n = tt.order();
    let mut weights = vec![sigma_bar * sigma_bar; n];
    weights[n - 1] = 1.0;
    let problem = Problem {
        x: tt.factors(),
        star: tt_star.factors(),
        weights,
    };
    let plain = problem.alternate(problem.identity())?;
    if plain.dist2 == 0.0 {
        return Ok(plain);
    }
    let restart = problem.alternate(problem.greedy()?)?;
    Ok(if restart.dist2 < plain.dist2 { restart } else { plain })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma5Check {
    /// `‖X − X⋆‖_F²`.
    pub ambient2: f64,
    pub report: FactorDistanceReport,
    /// `σ̄²(X) ≤ 9σ̄²(X⋆)/4`.
    pub precondition: bool,
    /// `dist² / (8(N + 1 + Σ_{i=2}^{N−1} r_i) κ²(X⋆))`.
    pub lower_bound: f64,
    /// `(9N/4)·dist²`.
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl Lemma5Check {
    pub fn summary(&self) -> DistanceSummary {
        DistanceSummary {
            dist2: self.report.dist2,
            sweeps: self.report.sweeps,
            converged: self.report.converged,
            lemma5_lower_ok: self.lower_ok,
            lemma5_upper_ok: self.upper_ok,
        }
    }
}

/// Evaluates the two-sided comparison between the ambient error and the
/// factor distance, with `σ̄` and `κ` taken from the ground truth.
pub fn lemma5_check(tt: &TtTensor, tt_star: &TtTensor) -> Result<Lemma5Check> {
    let ranks = tt_star.ranks();
    let x = tt.to_dense();
    let x_star = tt_star.to_dense();
    let star = spectral_summary(&x_star, &ranks)?;
    let sigma_bar_x = spectral_summary(&x, &ranks)?.sigma_max;
    let report = factor_distance(tt, tt_star, star.sigma_max)?;
    let ambient2 = x.distance(&x_star)?.powi(2);
    let n = tt.order() as f64;
    let s = n + 1.0 + ranks[1..].iter().map(|&r| r as f64).sum::<f64>();
    let lower_bound = report.dist2 / (8.0 * s * star.kappa * star.kappa);
    let upper_bound = 9.0 * n / 4.0 * report.dist2;
    // Rounding slack only: both sides are accumulated sums of squares.
    let slack = 1e-12 * (ambient2 + upper_bound) + f64::MIN_POSITIVE;
    Ok(Lemma5Check {
        ambient2,
        precondition: sigma_bar_x * sigma_bar_x <= 2.25 * star.sigma_max * star.sigma_max,
        lower_ok: ambient2 + slack >= lower_bound,
        upper_ok: ambient2 <= upper_bound + slack,
        lower_bound,
        upper_bound,
        report,
    })
}
