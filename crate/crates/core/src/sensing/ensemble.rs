use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, stream_rng};
use crate::tensor::{dot, validate_dims, DenseTensor};

/// Rows per block in adjoint-type reductions. Partial sums are formed per
/// block and then added in block order, so results do not depend on how many
/// threads run the blocks.
const BLOCK_ROWS: usize = 256;

/// Default ceiling for [`StorageMode::Auto`] materialization, in bytes.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    /// Keep all `m` measurement tensors in memory.
    Materialized,
    /// Regenerate each `A_k` from `(master_seed, k)` whenever it is needed.
    Streamed,
    /// Materialize when the ensemble fits under a byte limit.
    Auto,
}

/// Gaussian measurement operator: `A_k` has i.i.d. standard normal entries
/// drawn from ChaCha8 stream `k` keyed by `master_seed`.
#[derive(Debug, Clone)]
pub struct GaussianEnsemble {
    m: usize,
    dims: Vec<usize>,
    len: usize,
    master_seed: u64,
    rows: Option<Arc<Vec<f64>>>,
}

impl GaussianEnsemble {
    pub fn new(m: usize, dims: Vec<usize>, master_seed: u64, storage: StorageMode) -> Result<Self> {
        Self::with_limit(m, dims, master_seed, storage, DEFAULT_MATERIALIZE_LIMIT)
    }

    pub fn with_limit(
        m: usize,
        dims: Vec<usize>,
        master_seed: u64,
        storage: StorageMode,
        materialize_limit: usize,
    ) -> Result<Self> {
        validate_dims(&dims)?;
        if m == 0 {
            return Err(Error::config("measurement count must be positive"));
        }
        let len: usize = dims.iter().product();
        let materialize = match storage {
            StorageMode::Materialized => true,
            StorageMode::Streamed => false,
            StorageMode::Auto => m
                .checked_mul(len)
                .and_then(|v| v.checked_mul(8))
                .is_some_and(|bytes| bytes <= materialize_limit),
        };
        let mut ens = Self {
            m,
            dims,
            len,
            master_seed,
            rows: None,
        };
        if materialize {
            let mut rows = vec![0.0; m * len];
            rows.par_chunks_mut(len)
                .enumerate()
                .for_each(|(k, row)| ens.generate_row(k, row));
            ens.rows = Some(Arc::new(rows));
        }
        Ok(ens)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn is_materialized(&self) -> bool {
        self.rows.is_some()
    }

    fn generate_row(&self, k: usize, out: &mut [f64]) {
        fill_standard_normal(&mut stream_rng(self.master_seed, k as u64), out);
    }

    /// Runs `f(k, A_k)` for `k` in `range`, in ascending order.
    fn for_rows(&self, range: std::ops::Range<usize>, mut f: impl FnMut(usize, &[f64])) {
        match &self.rows {
            Some(rows) => {
                for k in range {
                    f(k, &rows[k * self.len..(k + 1) * self.len]);
                }
            }
            None => {
                let mut buf = vec![0.0; self.len];
                for k in range {
                    self.generate_row(k, &mut buf);
                    f(k, &buf);
                }
            }
        }
    }

    /// The `k`-th measurement tensor.
    pub fn measurement(&self, k: usize) -> Result<DenseTensor> {
        if k >= self.m {
            return Err(Error::Index(format!("measurement {k} of {}", self.m)));
        }
        let mut data = vec![0.0; self.len];
        self.for_rows(k..k + 1, |_, row| data.copy_from_slice(row));
        DenseTensor::new(self.dims.clone(), data)
    }

    fn check_tensor(&self, x: &DenseTensor) -> Result<()> {
        if x.dims() != self.dims.as_slice() {
            return Err(Error::shape(format!(
                "tensor dims {:?} do not match ensemble dims {:?}",
                x.dims(),
                self.dims
            )));
        }
        Ok(())
    }

    fn check_vector(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.m {
            return Err(Error::shape(format!(
                "vector of length {} for {} measurements",
                z.len(),
                self.m
            )));
        }
        Ok(())
    }

    /// `A(x)_k = ⟨A_k, x⟩`.
    pub fn apply(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        self.check_tensor(x)?;
        let xs = x.data();
        let mut out = vec![0.0; self.m];
        out.par_chunks_mut(BLOCK_ROWS)
            .enumerate()
            .for_each(|(b, chunk)| {
                let start = b * BLOCK_ROWS;
                self.for_rows(start..start + chunk.len(), |k, row| {
                    chunk[k - start] = dot(row, xs);
                });
            });
        Ok(out)
    }

    /// `Σ_k z_k A_k`.
    pub fn adjoint(&self, z: &[f64]) -> Result<DenseTensor> {
        self.check_vector(z)?;
        let (_, acc) = self.apply_and_accumulate(&DenseTensor::zeros(self.dims.clone())?, |k, _| z[k])?;
        Ok(acc)
    }

    /// One pass over the ensemble computing `v_k = ⟨A_k, x⟩` and
    /// `Σ_k w(k, v_k) A_k`. The accumulation order is the same as
    /// [`GaussianEnsemble::adjoint`], so both agree bit for bit.
    pub fn apply_and_accumulate<W>(&self, x: &DenseTensor, weight: W) -> Result<(Vec<f64>, DenseTensor)>
    where
        W: Fn(usize, f64) -> f64 + Sync,
    {
        self.check_tensor(x)?;
        let xs = x.data();
        let n_blocks = self.m.div_ceil(BLOCK_ROWS);
        let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK_ROWS;
                let end = (start + BLOCK_ROWS).min(self.m);
                let mut values = Vec::with_capacity(end - start);
                let mut acc = vec![0.0; self.len];
                self.for_rows(start..end, |k, row| {
                    let v = dot(row, xs);
                    values.push(v);
                    let w = weight(k, v);
                    if w != 0.0 {
                        for (a, r) in acc.iter_mut().zip(row) {
                            *a += w * r;
                        }
                    }
                });
                (values, acc)
            })
            .collect();
        let mut values = Vec::with_capacity(self.m);
        let mut total = vec![0.0; self.len];
        for (v, acc) in partials {
            values.extend(v);
            for (t, a) in total.iter_mut().zip(&acc) {
                *t += a;
            }
        }
        Ok((values, DenseTensor::new(self.dims.clone(), total)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{gaussian_dense, random_tt};
    use crate::rng::rng_from_seed;

    fn ensemble(m: usize, dims: &[usize], mode: StorageMode) -> GaussianEnsemble {
        GaussianEnsemble::new(m, dims.to_vec(), 1234, mode).unwrap()
    }

    #[test]
    fn zero_tensor_maps_to_zero() {
        let a = ensemble(7, &[2, 3, 2], StorageMode::Materialized);
        let y = a.apply(&DenseTensor::zeros(vec![2, 3, 2]).unwrap()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        let z = a.adjoint(&[0.0; 7]).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adjoint_of_unit_vector_is_the_measurement() {
        let a = ensemble(5, &[3, 2], StorageMode::Materialized);
        let mut e = vec![0.0; 5];
        e[3] = 1.0;
        assert_eq!(a.adjoint(&e).unwrap(), a.measurement(3).unwrap());
    }

    #[test]
    fn streamed_and_materialized_agree_bitwise() {
        let dims = [3, 4, 2];
        let mat = ensemble(600, &dims, StorageMode::Materialized);
        let stream = ensemble(600, &dims, StorageMode::Streamed);
        assert!(mat.is_materialized() && !stream.is_materialized());
        let x = gaussian_dense(&dims, 5).unwrap();
        assert_eq!(mat.apply(&x).unwrap(), stream.apply(&x).unwrap());
        let z: Vec<f64> = (0..600).map(|k| (k as f64 * 0.37).sin()).collect();
        assert_eq!(mat.adjoint(&z).unwrap(), stream.adjoint(&z).unwrap());
        assert_eq!(mat.measurement(599).unwrap(), stream.measurement(599).unwrap());
    }

    #[test]
    fn measurement_depends_only_on_seed_and_index() {
        let small = ensemble(3, &[4, 4], StorageMode::Materialized);
        let big = ensemble(50, &[4, 4], StorageMode::Streamed);
        assert_eq!(small.measurement(2).unwrap(), big.measurement(2).unwrap());
    }

    #[test]
    fn inner_product_with_all_ones() {
        let a = ensemble(1, &[2, 2], StorageMode::Materialized);
        let a1 = a.measurement(0).unwrap();
        let expected: f64 = a1.data().iter().sum();
        let ones = DenseTensor::new(vec![2, 2], vec![1.0; 4]).unwrap();
        assert!((a.apply(&ones).unwrap()[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn linearity() {
        let dims = [3, 3, 3];
        let a = ensemble(40, &dims, StorageMode::Materialized);
        let x = gaussian_dense(&dims, 1).unwrap();
        let y = gaussian_dense(&dims, 2).unwrap();
        let (alpha, beta) = (0.7, -1.3);
        let combo = x.scaled(alpha).add_scaled(beta, &y).unwrap();
        let lhs = a.apply(&combo).unwrap();
        let ax = a.apply(&x).unwrap();
        let ay = a.apply(&y).unwrap();
        for k in 0..40 {
            let rhs = alpha * ax[k] + beta * ay[k];
            assert!((lhs[k] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        use rand::Rng;
        let dims = [3, 4, 3];
        let a = ensemble(300, &dims, StorageMode::Materialized);
        let mut rng = rng_from_seed(77);
        for trial in 0..50 {
            let x = gaussian_dense(&dims, 1000 + trial).unwrap();
            let z: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs: f64 = a.apply(&x).unwrap().iter().zip(&z).map(|(u, v)| u * v).sum();
            let rhs = x.inner(&a.adjoint(&z).unwrap()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
        }
    }

    #[test]
    fn fused_pass_matches_separate_calls() {
        let dims = [4, 4, 4];
        let a = ensemble(700, &dims, StorageMode::Materialized);
        let x = random_tt(&dims, &[2, 2], 3).unwrap().to_dense();
        let (vals, acc) = a.apply_and_accumulate(&x, |_, v| v.signum()).unwrap();
        assert_eq!(vals, a.apply(&x).unwrap());
        let signs: Vec<f64> = vals.iter().map(|v| v.signum()).collect();
        assert_eq!(acc, a.adjoint(&signs).unwrap());
    }

    #[test]
    fn auto_mode_respects_limit() {
        let a = GaussianEnsemble::with_limit(100, vec![10, 10], 0, StorageMode::Auto, 100 * 100 * 8).unwrap();
        assert!(a.is_materialized());
        let b = GaussianEnsemble::with_limit(100, vec![10, 10], 0, StorageMode::Auto, 100 * 100 * 8 - 1).unwrap();
        assert!(!b.is_materialized());
    }

    #[test]
    fn shape_errors() {
        let a = ensemble(4, &[2, 2], StorageMode::Materialized);
        assert!(a.apply(&DenseTensor::zeros(vec![4]).unwrap()).is_err());
        assert!(a.adjoint(&[1.0; 3]).is_err());
        assert!(a.measurement(4).is_err());
    }
}
