//! Robust recovery of low tensor-train-rank tensors from outlier-corrupted
//! Gaussian linear measurements.

pub mod analysis;
pub mod decompose;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sensing;
pub mod solvers;
pub mod tensor;
pub mod tt;

pub use decompose::{random_tt, spectral_summary, tt_svd, SpectralSummary, TtSvd};
pub use error::{Error, Result};
pub use sensing::{CorruptionModel, GaussianEnsemble, Measurements, StorageMode};
pub use solvers::{SolverConfig, SolverOutput, StepSchedule, TraceRecord};
pub use tensor::DenseTensor;
pub use tt::{Factor, TtTensor};
