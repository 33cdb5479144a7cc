use nalgebra::DMatrix;

use crate::decompose::spectral_summary;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, fill_standard_normal, rng_from_seed};
use crate::sensing::{GaussianEnsemble, ProbeStats};
use crate::solvers::{factor_subgradients, polar_retract, stiefel_project};
use crate::tt::TtTensor;

use super::distance::{factor_distance, rotated_factor};

/// Left-orthogonal tensor near `tt_star`: every factor moves by a Gaussian
/// direction of Frobenius norm `radius·‖L(X⋆_i)‖_F`, and factors `1..N−1`
/// are retracted back to orthonormal.
pub fn perturb_factors(tt_star: &TtTensor, radius: f64, seed: u64) -> Result<TtTensor> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::config(format!("radius {radius} must be finite and nonnegative")));
    }
    let n = tt_star.order();
    let mut factors = Vec::with_capacity(n);
    for (i, f) in tt_star.factors().iter().enumerate() {
        if radius == 0.0 {
            factors.push(f.clone());
            continue;
        }
        let l = f.left_unfolding();
        let mut data = vec![0.0; l.len()];
        fill_standard_normal(&mut rng_from_seed(derive_seed(seed, &[i as u64])), &mut data);
        let e = DMatrix::from_vec(l.nrows(), l.ncols(), data);
        let moved = l + e.scale(radius * l.norm() / e.norm());
        let updated = if i + 1 < n { polar_retract(&moved)? } else { moved };
        factors.push(f.with_unfolding(updated)?);
    }
    TtTensor::new_left_orthogonal(factors)
}

/// `Σ_i ⟨L(X_i) − L_R(X⋆_i), P_i(g_i)⟩`, with `P_i` the tangent projection
/// at `L(X_i)` for `i < N` and the identity for the last factor.
pub fn regularity_inner(
    tt: &TtTensor,
    tt_star: &TtTensor,
    rotations: &[DMatrix<f64>],
    grads: &[DMatrix<f64>],
) -> Result<f64> {
    let n = tt.order();
    if rotations.len() + 1 != n || grads.len() != n {
        return Err(Error::shape("rotation or gradient count does not match the order"));
    }
    let one = DMatrix::identity(1, 1);
    let mut total = 0.0;
    for i in 0..n {
        let left = if i == 0 { &one } else { &rotations[i - 1] };
        let right = if i + 1 == n { &one } else { &rotations[i] };
        let star = rotated_factor(tt_star.factor(i), left, right);
        let l = tt.factor(i).left_unfolding();
        let diff = l - star.left_unfolding();
        let g = if i + 1 < n {
            stiefel_project(l, &grads[i])?
        } else {
            grads[i].clone()
        };
        total += diff.dot(&g);
    }
    Ok(total)
}

/// Samples the factor-space correlation between the error and the
/// projected subgradient at perturbations of `tt_star` (see
/// [`perturb_factors`]). Rotations come from [`factor_distance`] with `σ̄`
/// of the ground truth.
pub fn regularity_probe(
    a: &GaussianEnsemble,
    y: &[f64],
    tt_star: &TtTensor,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<ProbeStats> {
    if trials == 0 {
        return Err(Error::config("probe needs at least one trial"));
    }
    let sigma_bar = spectral_summary(&tt_star.to_dense(), &tt_star.ranks())?.sigma_max;
    let mut samples = Vec::with_capacity(trials);
    for j in 0..trials {
        let tt = perturb_factors(tt_star, radius, derive_seed(seed, &[j as u64]))?;
        let rep = factor_distance(&tt, tt_star, sigma_bar)?;
        let grads = factor_subgradients(a, &tt, y)?;
        samples.push(regularity_inner(&tt, tt_star, &rep.rotations, &grads)?);
    }
    Ok(ProbeStats::from_samples(samples, 0.0, 0))
}
