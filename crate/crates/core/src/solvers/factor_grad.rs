use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sensing::GaussianEnsemble;
use crate::tensor::DenseTensor;
use crate::tt::TtTensor;

use super::loss::full_subgradient;

/// Subgradient of `F(X_1, …, X_N) = f(X_1⋯X_N)` with respect to each left
/// unfolding `L(X_i)`, obtained by contracting the dense subgradient with
/// the left and right interfaces of `tt`.
pub fn factor_subgradients(a: &GaussianEnsemble, tt: &TtTensor, y: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let g = full_subgradient(a, &tt.to_dense(), y)?;
    contract_factors(tt, &g)
}

/// For every factor `i`, the matrix whose slice `s` is
/// `Σ P_{<i}(rows)ᵀ · G(·, s, ·) · P_{>i}(cols)ᵀ`, i.e. the adjoint of the
/// map `L(Δ_i) ↦ dense(X_1, …, Δ_i, …, X_N)` applied to `g`.
pub fn contract_factors(tt: &TtTensor, g: &DenseTensor) -> Result<Vec<DMatrix<f64>>> {
    if g.dims() != tt.dims().as_slice() {
        return Err(Error::shape(format!(
            "tensor of dims {:?} against a train of dims {:?}",
            g.dims(),
            tt.dims()
        )));
    }
    let n = tt.order();
    let dims = tt.dims();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = tt.factor(i);
        let (rl, d, rr) = (f.r_left(), f.dim(), f.r_right());
        let rows: usize = dims[..i].iter().product();
        let cols: usize = dims[i + 1..].iter().product();
        // G viewed as rows x (d * cols) with column index s + d*b.
        let gm = DMatrix::from_column_slice(rows, d * cols, g.data());
        let t = if i == 0 {
            gm
        } else {
            tt.left_interface(i).transpose() * gm
        };
        let right = if i + 1 == n {
            DMatrix::from_element(1, 1, 1.0)
        } else {
            tt.right_interface(i + 1).transpose()
        };
        let mut grad = DMatrix::zeros(rl * d, rr);
        for s in 0..d {
            let ts = DMatrix::from_fn(rl, cols, |a, b| t[(a, s + d * b)]);
            grad.view_mut((s * rl, 0), (rl, rr)).copy_from(&(ts * &right));
        }
        out.push(grad);
    }
    Ok(out)
}
