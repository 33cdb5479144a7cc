use crate::decompose::{tt_svd, validate_ranks};
use crate::error::{Error, Result};
use crate::sensing::{ceil_snapped, GaussianEnsemble};
use crate::tt::TtTensor;

/// Largest-magnitude threshold `τ`: the `⌈αm⌉`-th largest `|y_k|`, or `+∞`
/// when nothing is truncated.
pub fn truncation_threshold(y: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let k = if alpha > 0.0 {
        ceil_snapped(alpha * y.len() as f64)
    } else {
        0
    };
    if k == 0 {
        return Ok(f64::INFINITY);
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags[k - 1])
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::config(format!("truncation fraction {alpha} outside [0, 1)")));
    }
    Ok(())
}

/// Truncated spectral initialization:
/// `tt_svd((1/((1−α)m)) Σ_k y_k A_k 1{|y_k| ≤ τ}, ranks)`. Ties at `τ` are kept.
pub fn truncated_spectral_init(a: &GaussianEnsemble, y: &[f64], ranks: &[usize], alpha: f64) -> Result<TtTensor> {
    check_alpha(alpha)?;
    validate_ranks(a.dims(), ranks)?;
    if y.len() != a.m() {
        return Err(Error::shape(format!(
            "{} measurements for an ensemble of {}",
            y.len(),
            a.m()
        )));
    }
    if y.is_empty() {
        return Err(Error::config("no measurements"));
    }
    let tau = truncation_threshold(y, alpha)?;
    let scale = 1.0 / ((1.0 - alpha) * y.len() as f64);
    let weights: Vec<f64> = y
        .iter()
        .map(|&v| if v.abs() <= tau { v * scale } else { 0.0 })
        .collect();
    if y.iter().all(|v| !(v.abs() <= tau)) {
        return Err(Error::config(format!(
            "truncation fraction {alpha} removes all {} measurements",
            y.len()
        )));
    }
    let avg = a.adjoint(&weights)?;
    Ok(tt_svd(&avg, ranks)?.tt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::StorageMode;

    #[test]
    fn threshold_example() {
        let y = [5.0, -3.0, 2.0, 1.0, -0.5];
        let tau = truncation_threshold(&y, 0.4).unwrap();
        assert_eq!(tau, 3.0);
        assert_eq!(y.iter().filter(|v| v.abs() <= tau).count(), 4);
        assert_eq!(truncation_threshold(&y, 0.0).unwrap(), f64::INFINITY);
        assert!(truncation_threshold(&y, 1.0).is_err());
    }

    #[test]
    fn ties_are_kept() {
        let y = [2.0, -2.0, 2.0, 1.0];
        let tau = truncation_threshold(&y, 0.25).unwrap();
        assert_eq!(tau, 2.0);
        assert_eq!(y.iter().filter(|v| v.abs() <= tau).count(), 4);
    }

    #[test]
    fn zero_fraction_is_plain_spectral() {
        let dims = vec![3, 3, 3];
        let a = GaussianEnsemble::new(30, dims, 4, StorageMode::Materialized).unwrap();
        let y: Vec<f64> = (0..30).map(|k| (k as f64 * 0.37).sin()).collect();
        let x0 = truncated_spectral_init(&a, &y, &[2, 2], 0.0).unwrap();
        let plain = a.adjoint(&y).unwrap().scaled(1.0 / 30.0);
        let reference = tt_svd(&plain, &[2, 2]).unwrap().tt.to_dense();
        assert!(x0.to_dense().distance(&reference).unwrap() < 1e-12);
    }

    #[test]
    fn all_truncated_is_an_error() {
        let a = GaussianEnsemble::new(1, vec![2, 2], 4, StorageMode::Materialized).unwrap();
        assert!(truncated_spectral_init(&a, &[f64::NAN], &[1], 0.5).is_err());
        assert!(truncated_spectral_init(&a, &[1.0], &[1], 1.0).is_err());
    }
}
