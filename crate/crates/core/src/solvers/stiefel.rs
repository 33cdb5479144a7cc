use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{orthonormality_residual, polar_factor};

/// Largest `‖LᵀL − I‖_F` accepted by [`stiefel_project`].
pub const STIEFEL_TOL: f64 = 1e-8;

/// Smallest singular value below which [`polar_retract`] refuses to run.
pub const RETRACTION_SIGMA_MIN: f64 = 1e-12;

/// Tangent-space projection at the orthonormal `L`:
/// `U − ½ L (UᵀL + LᵀU)`.
pub fn stiefel_project(l: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if l.shape() != u.shape() {
        return Err(Error::shape(format!(
            "tangent projection of {:?} at a point of shape {:?}",
            u.shape(),
            l.shape()
        )));
    }
    let residual = orthonormality_residual(l);
    if !(residual <= STIEFEL_TOL) {
        return Err(Error::NotOrthonormal { residual });
    }
    Ok(project_unchecked(l, u))
}

pub(crate) fn project_unchecked(l: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let utl = u.transpose() * l;
    let sym = &utl + utl.transpose();
    u - l * sym * 0.5
}

/// `‖TᵀL + LᵀT‖_F`, zero for tangent vectors.
pub fn tangency_residual(l: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    let tl = t.transpose() * l;
    (&tl + tl.transpose()).norm()
}

/// Polar retraction `G(GᵀG)^{-1/2} = UVᵀ`.
pub fn polar_retract(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    retract(g, 0)
}

pub(crate) fn retract(g: &DMatrix<f64>, factor: usize) -> Result<DMatrix<f64>> {
    if g.nrows() < g.ncols() {
        return Err(Error::shape(format!(
            "retraction needs a tall matrix, got {:?}",
            g.shape()
        )));
    }
    let (q, sigma_min) = polar_factor(g)?;
    if !(sigma_min > RETRACTION_SIGMA_MIN) {
        return Err(Error::Retraction { factor, sigma_min });
    }
    Ok(q)
}
