//! Recovery metrics and the rotation-invariant factor distance.

mod distance;
mod regularity;

pub use distance::{
    factor_distance, lemma5_check, rotated_factor, DistanceSummary, FactorDistanceReport, Lemma5Check,
    MAX_SWEEPS, SWEEP_TOL,
};
pub use regularity::{perturb_factors, regularity_inner, regularity_probe};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// `‖x − x⋆‖_F² / ‖x⋆‖_F²`.
pub fn recovery_error(x: &DenseTensor, x_star: &DenseTensor) -> Result<f64> {
    let norm2 = x_star.frobenius_norm().powi(2);
    if !(norm2 > 0.0) {
        return Err(Error::config("ground truth has zero norm"));
    }
    Ok(x.distance(x_star)?.powi(2) / norm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::gaussian_dense;

    #[test]
    fn recovery_error_examples() {
        let x = gaussian_dense(&[3, 4], 1).unwrap();
        assert_eq!(recovery_error(&x, &x).unwrap(), 0.0);
        assert!((recovery_error(&x.scaled(2.0), &x).unwrap() - 1.0).abs() < 1e-15);
        let zero = DenseTensor::zeros(vec![3, 4]).unwrap();
        assert_eq!(recovery_error(&zero, &x).unwrap(), 1.0);
        assert!(recovery_error(&x, &zero).is_err());
    }
}
