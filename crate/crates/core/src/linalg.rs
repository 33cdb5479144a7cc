//! Small dense linear-algebra helpers shared by the decomposition and the
//! solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin SVD with singular values in non-increasing order and a fixed sign
/// convention: the largest-magnitude entry of every left singular vector is
/// positive (first occurrence wins on ties), with the matching right vector
/// flipped alongside.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl SortedSvd {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("SVD input contains non-finite entries"));
        }
        let (u, s, v_t) = thin_svd(m)?;
        let k = s.len();

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

        let mut u_sorted = DMatrix::zeros(u.nrows(), k);
        let mut vt_sorted = DMatrix::zeros(k, v_t.ncols());
        let mut s_sorted = DVector::zeros(k);
        for (dst, &src) in order.iter().enumerate() {
            let mut ucol = u.column(src).into_owned();
            let mut vrow = v_t.row(src).into_owned();
            if leading_entry_is_negative(ucol.as_slice()) {
                ucol.neg_mut();
                vrow.neg_mut();
            }
            u_sorted.set_column(dst, &ucol);
            vt_sorted.set_row(dst, &vrow);
            s_sorted[dst] = s[src];
        }
        Ok(Self {
            u: u_sorted,
            singular_values: s_sorted,
            v_t: vt_sorted,
        })
    }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let svd = to_faer(m)
        .thin_svd()
        .map_err(|e| Error::config(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    Ok((
        DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, j)]),
        DVector::from_fn(k, |i, _| s[i]),
        DMatrix::from_fn(k, v.nrows(), |i, j| v[(j, i)]),
    ))
}

fn leading_entry_is_negative(v: &[f64]) -> bool {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    v.get(best).is_some_and(|x| *x < 0.0)
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::config("SVD input contains non-finite entries"));
    }
    let mut s = to_faer(m)
        .singular_values()
        .map_err(|e| Error::config(format!("SVD did not converge: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `‖MᵀM − I‖_F`.
pub fn orthonormality_residual(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    (gram - DMatrix::<f64>::identity(m.ncols(), m.ncols())).norm()
}

/// Orthogonal factor `UVᵀ` of the polar decomposition, i.e. the nearest
/// orthonormal-column matrix. Also returns the smallest singular value.
pub fn polar_factor(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let svd = SortedSvd::new(m)?;
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok((&svd.u * &svd.v_t, sigma_min))
}

/// Product of a chain of matrices, left to right.
pub fn chain_product(chain: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut it = chain.iter();
    let first = it.next().expect("empty chain").clone();
    it.fold(first, |acc, m| acc * m)
}

/// Telescoping form of `A_1⋯A_N − B_1⋯B_N`:
/// `Σ_i B_1⋯B_{i−1} (A_i − B_i) A_{i+1}⋯A_N`.
pub fn telescoping_difference(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> DMatrix<f64> {
    assert_eq!(a.len(), b.len(), "chains of different length");
    assert!(!a.is_empty(), "empty chain");
    let n = a.len();
    let mut total = DMatrix::zeros(a[0].nrows(), a[n - 1].ncols());
    for i in 0..n {
        let mut term = DMatrix::identity(a[0].nrows(), a[0].nrows());
        for m in &b[..i] {
            term = term * m;
        }
        term = term * (&a[i] - &b[i]);
        for m in &a[i + 1..] {
            term = term * m;
        }
        total += term;
    }
    total
}
