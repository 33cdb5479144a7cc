//! Tensor-train representation.
//!
//! Factor `i` has shape `r_{i-1} x d_i x r_i` and is stored as its left
//! unfolding: the `d_i` slices `X_i(s)` (each `r_{i-1} x r_i`) stacked
//! vertically, so slice `s` occupies rows `s*r_{i-1} .. (s+1)*r_{i-1}`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::linalg::orthonormality_residual;
use crate::tensor::{parse_usizes, read_f64s, read_header_line, write_f64s, DenseTensor};

/// Tolerance on `‖LᵀL − I‖_F` for the left-orthogonal flag.
pub const LEFT_ORTHOGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    r_left: usize,
    dim: usize,
    r_right: usize,
    unfolding: DMatrix<f64>,
}

impl Factor {
    pub fn from_left_unfolding(
        r_left: usize,
        dim: usize,
        r_right: usize,
        unfolding: DMatrix<f64>,
    ) -> Result<Self> {
        if r_left == 0 || dim == 0 || r_right == 0 {
            return Err(Error::shape("factor extents must be positive"));
        }
        if unfolding.shape() != (r_left * dim, r_right) {
            return Err(Error::shape(format!(
                "left unfolding {:?} does not match factor {r_left}x{dim}x{r_right}",
                unfolding.shape()
            )));
        }
        Ok(Self {
            r_left,
            dim,
            r_right,
            unfolding,
        })
    }

    /// Builds a factor from its `dim` slices, each `r_left x r_right`.
    pub fn from_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::shape("factor needs at least one slice"))?;
        let (rl, rr) = first.shape();
        if slices.iter().any(|s| s.shape() != (rl, rr)) {
            return Err(Error::shape("factor slices differ in shape"));
        }
        let mut unfolding = DMatrix::zeros(rl * slices.len(), rr);
        for (s, m) in slices.iter().enumerate() {
            unfolding.view_mut((s * rl, 0), (rl, rr)).copy_from(m);
        }
        Self::from_left_unfolding(rl, slices.len(), rr, unfolding)
    }

    pub fn r_left(&self) -> usize {
        self.r_left
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r_right(&self) -> usize {
        self.r_right
    }

    pub fn left_unfolding(&self) -> &DMatrix<f64> {
        &self.unfolding
    }

    pub fn into_left_unfolding(self) -> DMatrix<f64> {
        self.unfolding
    }

    pub fn slice(&self, s: usize) -> DMatrixView<'_, f64> {
        self.unfolding
            .view((s * self.r_left, 0), (self.r_left, self.r_right))
    }

    pub fn slices(&self) -> Vec<DMatrix<f64>> {
        (0..self.dim).map(|s| self.slice(s).into_owned()).collect()
    }

    /// Element `(a, s, b)` of the order-3 array.
    pub fn get(&self, a: usize, s: usize, b: usize) -> f64 {
        self.unfolding[(s * self.r_left + a, b)]
    }

    /// Same shape, unfolding replaced.
    pub fn with_unfolding(&self, unfolding: DMatrix<f64>) -> Result<Self> {
        Self::from_left_unfolding(self.r_left, self.dim, self.r_right, unfolding)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            unfolding: &self.unfolding * c,
            ..self.clone()
        }
    }

    /// Slices `M·X(s)` for a `k x r_left` matrix `M`.
    pub fn left_multiplied(&self, m: &DMatrix<f64>) -> Self {
        let k = m.nrows();
        let mut out = DMatrix::zeros(k * self.dim, self.r_right);
        for s in 0..self.dim {
            out.view_mut((s * k, 0), (k, self.r_right))
                .copy_from(&(m * self.slice(s)));
        }
        Self {
            r_left: k,
            dim: self.dim,
            r_right: self.r_right,
            unfolding: out,
        }
    }

    /// Slices `X(s)·M` for an `r_right x k` matrix `M`.
    pub fn right_multiplied(&self, m: &DMatrix<f64>) -> Self {
        Self {
            r_right: m.ncols(),
            unfolding: &self.unfolding * m,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtTensor {
    factors: Vec<Factor>,
    left_orthogonal: bool,
}

impl TtTensor {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::shape("tensor train needs at least one factor"));
        }
        if factors[0].r_left != 1 {
            return Err(Error::rank(format!(
                "leading rank of factor 1 is {}, must be 1",
                factors[0].r_left
            )));
        }
        let last = factors.last().unwrap();
        if last.r_right != 1 {
            return Err(Error::rank(format!(
                "trailing rank of factor {} is {}, must be 1",
                factors.len(),
                last.r_right
            )));
        }
        for (i, w) in factors.windows(2).enumerate() {
            if w[0].r_right != w[1].r_left {
                return Err(Error::rank(format!(
                    "factor {} has trailing rank {} but factor {} has leading rank {}",
                    i + 1,
                    w[0].r_right,
                    i + 2,
                    w[1].r_left
                )));
            }
        }
        Ok(Self {
            factors,
            left_orthogonal: false,
        })
    }

    /// Like [`TtTensor::new`] but also sets the left-orthogonal flag after
    /// checking `L(X_i)ᵀL(X_i) = I` for every factor but the last.
    pub fn new_left_orthogonal(factors: Vec<Factor>) -> Result<Self> {
        let mut tt = Self::new(factors)?;
        let residual = tt.max_orthonormality_residual();
        if residual > LEFT_ORTHOGONAL_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
        tt.left_orthogonal = true;
        Ok(tt)
    }

    pub(crate) fn from_parts_unchecked(factors: Vec<Factor>, left_orthogonal: bool) -> Self {
        Self {
            factors,
            left_orthogonal,
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &Factor {
        &self.factors[i]
    }

    pub fn into_factors(self) -> Vec<Factor> {
        self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    /// Interior ranks `(r_1, ..., r_{N-1})`.
    pub fn ranks(&self) -> Vec<usize> {
        self.factors[..self.order() - 1]
            .iter()
            .map(|f| f.r_right)
            .collect()
    }

    pub fn is_left_orthogonal(&self) -> bool {
        self.left_orthogonal
    }

    /// Largest `‖L(X_i)ᵀL(X_i) − I‖_F` over the first `N−1` factors.
    pub fn max_orthonormality_residual(&self) -> f64 {
        self.factors[..self.order() - 1]
            .iter()
            .map(|f| orthonormality_residual(&f.unfolding))
            .fold(0.0, f64::max)
    }

    /// Replaces factor `i`, keeping shapes. Clears the orthogonality flag
    /// unless `i` is the last factor.
    pub fn with_factor(&self, i: usize, factor: Factor) -> Result<Self> {
        let old = &self.factors[i];
        if (old.r_left, old.dim, old.r_right) != (factor.r_left, factor.dim, factor.r_right) {
            return Err(Error::shape(format!(
                "replacement factor {}x{}x{} does not match {}x{}x{}",
                factor.r_left, factor.dim, factor.r_right, old.r_left, old.dim, old.r_right
            )));
        }
        let mut factors = self.factors.clone();
        factors[i] = factor;
        let keep = self.left_orthogonal && i + 1 == self.order();
        Ok(Self::from_parts_unchecked(factors, keep))
    }

    pub fn scale_last(&mut self, c: f64) {
        let last = self.factors.last_mut().unwrap();
        last.unfolding *= c;
    }

    /// Single entry as the chain product `X_1(s_1)⋯X_N(s_N)`.
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        if index.len() != self.order() {
            return Err(Error::Index(format!(
                "multi-index of length {} for order {}",
                index.len(),
                self.order()
            )));
        }
        let mut row = DMatrix::from_element(1, 1, 1.0);
        for (f, &s) in self.factors.iter().zip(index) {
            if s >= f.dim {
                return Err(Error::Index(format!("index {s} outside extent {}", f.dim)));
            }
            row = row * f.slice(s);
        }
        Ok(row[(0, 0)])
    }

    /// Left interface matrix for cut `i` (`1 <= i <= N`): row `s_1⋯s_i` holds
    /// `X_1(s_1)⋯X_i(s_i)`. Shape `(d_1⋯d_i) x r_i`.
    pub fn left_interface(&self, i: usize) -> DMatrix<f64> {
        let mut acc = self.factors[0].unfolding.clone();
        for f in &self.factors[1..i] {
            let rows = acc.nrows();
            let mut next = DMatrix::zeros(rows * f.dim, f.r_right);
            for s in 0..f.dim {
                next.view_mut((s * rows, 0), (rows, f.r_right))
                    .copy_from(&(&acc * f.slice(s)));
            }
            acc = next;
        }
        acc
    }

    /// Right interface for cut `i` (`0 <= i < N`): column `s_{i+1}⋯s_N` holds
    /// `X_{i+1}(s_{i+1})⋯X_N(s_N)`. Shape `r_i x (d_{i+1}⋯d_N)`.
    pub fn right_interface(&self, i: usize) -> DMatrix<f64> {
        let n = self.order();
        // Built right to left; the column index puts s_{i+1} fastest.
        let last = &self.factors[n - 1];
        let mut acc = DMatrix::zeros(last.r_left, last.dim);
        for s in 0..last.dim {
            acc.set_column(s, &last.slice(s).column(0));
        }
        for f in self.factors[i..n - 1].iter().rev() {
            let cols = acc.ncols();
            let mut next = DMatrix::zeros(f.r_left, f.dim * cols);
            for c in 0..cols {
                for s in 0..f.dim {
                    let v = f.slice(s) * acc.column(c);
                    next.set_column(s + f.dim * c, &v);
                }
            }
            acc = next;
        }
        acc
    }

    pub fn to_dense(&self) -> DenseTensor {
        let full = self.left_interface(self.order());
        DenseTensor::new(self.dims(), full.as_slice().to_vec()).expect("consistent dims")
    }

    /// Left-to-right QR sweep: each `L(X_i)`, `i < N`, is replaced by the
    /// orthonormal `Q` and `R` is pushed into the next factor. `R` is kept
    /// with a nonnegative diagonal.
    pub fn left_orthogonalize(&self) -> Result<TtTensor> {
        let n = self.order();
        let mut factors = self.factors.clone();
        for i in 0..n - 1 {
            let l = factors[i].unfolding.clone();
            let (rows, cols) = l.shape();
            if rows < cols {
                return Err(Error::rank(format!(
                    "factor {} left unfolding is {rows}x{cols}; rank {cols} cannot be orthonormal",
                    i + 1
                )));
            }
            let qr = l.qr();
            let mut q = qr.q();
            let mut r = qr.r();
            for j in 0..cols {
                if r[(j, j)] < 0.0 {
                    q.column_mut(j).neg_mut();
                    r.row_mut(j).neg_mut();
                }
            }
            factors[i] = factors[i].with_unfolding(q)?;
            factors[i + 1] = factors[i + 1].left_multiplied(&r);
        }
        Ok(TtTensor::from_parts_unchecked(factors, true))
    }

    /// Writes the `TTF1` format: header `TTF1 N r0 d1 r1 ... dN rN`, then
    /// each factor's left unfolding in row-major order as little-endian f64.
    pub fn write_ttf<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = format!("TTF1 {} 1", self.order());
        for f in &self.factors {
            header.push_str(&format!(" {} {}", f.dim, f.r_right));
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        for f in &self.factors {
            let rm: Vec<f64> = f.unfolding.transpose().as_slice().to_vec();
            write_f64s(&mut w, &rm)?;
        }
        Ok(())
    }

    pub fn read_ttf<R: Read>(mut r: R) -> Result<TtTensor> {
        let header = read_header_line(&mut r)?;
        let mut fields = header.split_ascii_whitespace();
        if fields.next() != Some("TTF1") {
            return Err(Error::Format("missing TTF1 magic".into()));
        }
        let nums = parse_usizes(fields)?;
        let (&n, rest) = nums
            .split_first()
            .ok_or_else(|| Error::Format("TTF1 header lacks the order".into()))?;
        if n == 0 || rest.len() != 2 * n + 1 {
            return Err(Error::Format(format!(
                "TTF1 header for order {n} must list {} extents, found {}",
                2 * n + 1,
                rest.len()
            )));
        }
        let sizes: Vec<(usize, usize, usize)> = (0..n)
            .map(|i| (rest[2 * i], rest[2 * i + 1], rest[2 * i + 2]))
            .collect();
        let total: usize = sizes.iter().map(|(a, d, b)| a * d * b).sum();
        let payload = read_f64s(&mut r, total)?;
        let mut offset = 0;
        let mut factors = Vec::with_capacity(n);
        for (rl, d, rr) in sizes {
            let len = rl * d * rr;
            let m = DMatrix::from_row_slice(rl * d, rr, &payload[offset..offset + len]);
            offset += len;
            factors.push(Factor::from_left_unfolding(rl, d, rr, m)?);
        }
        let tt = TtTensor::new(factors)?;
        if tt.order() > 0 && tt.max_orthonormality_residual() <= LEFT_ORTHOGONAL_TOL {
            Ok(TtTensor::from_parts_unchecked(tt.factors, true))
        } else {
            Ok(tt)
        }
    }
}
