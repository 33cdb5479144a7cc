//! TT-SVD, spectral summaries and random low-rank test tensors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, SortedSvd};
use crate::rng::{fill_standard_normal, rng_from_seed};
use crate::tensor::DenseTensor;
use crate::tt::{Factor, TtTensor};

#[derive(Debug, Clone)]
pub struct TtSvd {
    pub tt: TtTensor,
    /// Discarded singular-value tail `sqrt(Σ_{j>r_i} σ_j²)` at each sweep step.
    pub tails: Vec<f64>,
}

impl TtSvd {
    /// `sqrt(Σ tails²)`, an upper bound on the reconstruction error.
    pub fn error_bound(&self) -> f64 {
        self.tails.iter().map(|t| t * t).sum::<f64>().sqrt()
    }
}

/// Checks `ranks` against `dims`: one rank per cut, each positive and no
/// larger than either side of its unfolding or than `r_{i-1} d_i`.
pub fn validate_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    let n = dims.len();
    if n < 2 {
        return Err(Error::shape("tensor-train ranks need order at least 2"));
    }
    if ranks.len() != n - 1 {
        return Err(Error::rank(format!(
            "order {n} needs {} ranks, got {}",
            n - 1,
            ranks.len()
        )));
    }
    let mut prev = 1usize;
    for (i, &r) in ranks.iter().enumerate() {
        let left: usize = dims[..=i].iter().product();
        let right: usize = dims[i + 1..].iter().product();
        let bound = left.min(right).min(prev * dims[i]);
        if r == 0 || r > bound {
            return Err(Error::rank(format!(
                "rank r_{} = {r} must lie in 1..={bound} for dims {dims:?}",
                i + 1
            )));
        }
        prev = r;
    }
    Ok(())
}

/// Sequential truncated SVD sweep. The output is left-orthogonal.
pub fn tt_svd(x: &DenseTensor, ranks: &[usize]) -> Result<TtSvd> {
    let dims = x.dims().to_vec();
    validate_ranks(&dims, ranks)?;
    let n = dims.len();

    let mut factors = Vec::with_capacity(n);
    let mut tails = Vec::with_capacity(n - 1);
    // Remainder, column-major (r_prev * d_i) x (d_{i+1} ... d_N).
    let mut rest: Vec<f64> = x.data().to_vec();
    let mut r_prev = 1usize;
    for i in 0..n - 1 {
        let rows = r_prev * dims[i];
        let cols = rest.len() / rows;
        let m = DMatrix::from_column_slice(rows, cols, &rest);
        let svd = SortedSvd::new(&m)?;
        let r = ranks[i];
        let s = &svd.singular_values;
        let tail = s.iter().skip(r).map(|v| v * v).sum::<f64>().sqrt();
        tails.push(tail);

        let u = svd.u.columns(0, r).into_owned();
        factors.push(Factor::from_left_unfolding(r_prev, dims[i], r, u)?);

        let mut carry = svd.v_t.rows(0, r).into_owned();
        for (k, mut row) in carry.row_iter_mut().enumerate() {
            row *= s[k];
        }
        rest = carry.as_slice().to_vec();
        r_prev = r;
    }
    let last = DMatrix::from_column_slice(r_prev * dims[n - 1], 1, &rest);
    factors.push(Factor::from_left_unfolding(r_prev, dims[n - 1], 1, last)?);

    Ok(TtSvd {
        tt: TtTensor::from_parts_unchecked(factors, true),
        tails,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub per_cut_sigmas: Vec<Vec<f64>>,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_max / sigma_min`; infinite when some cut is rank deficient at
    /// its declared rank.
    pub kappa: f64,
    pub rank_deficient: bool,
}

pub fn spectral_summary(x: &DenseTensor, ranks: &[usize]) -> Result<SpectralSummary> {
    validate_ranks(x.dims(), ranks)?;
    let mut per_cut = Vec::with_capacity(ranks.len());
    let mut sigma_min = f64::INFINITY;
    let mut sigma_max: f64 = 0.0;
    for (i, &r) in ranks.iter().enumerate() {
        let s = singular_values(&x.unfold(i + 1)?)?;
        sigma_max = sigma_max.max(s[0]);
        sigma_min = sigma_min.min(s.get(r - 1).copied().unwrap_or(0.0));
        per_cut.push(s);
    }
    let rank_deficient = !(sigma_min > 0.0);
    let kappa = if rank_deficient {
        f64::INFINITY
    } else {
        sigma_max / sigma_min
    };
    Ok(SpectralSummary {
        per_cut_sigmas: per_cut,
        sigma_min,
        sigma_max,
        kappa,
        rank_deficient,
    })
}

/// I.i.d. standard normal dense tensor from `seed`.
pub fn gaussian_dense(dims: &[usize], seed: u64) -> Result<DenseTensor> {
    let mut x = DenseTensor::zeros(dims.to_vec())?;
    fill_standard_normal(&mut rng_from_seed(seed), x.data_mut());
    Ok(x)
}

/// Unit-Frobenius-norm tensor of the given TT ranks: a Gaussian tensor
/// truncated by TT-SVD, then normalized through its last factor.
pub fn random_tt(dims: &[usize], ranks: &[usize], seed: u64) -> Result<TtTensor> {
    validate_ranks(dims, ranks)?;
    let g = gaussian_dense(dims, seed)?;
    let mut tt = tt_svd(&g, ranks)?.tt;
    let norm = tt.factors().last().unwrap().left_unfolding().norm();
    if !(norm > 0.0) {
        return Err(Error::config("degenerate random tensor"));
    }
    tt.scale_last(1.0 / norm);
    Ok(tt)
}
