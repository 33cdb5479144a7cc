//! Gaussian measurement ensembles, outlier corruption and empirical probes of
//! the ℓ1/ℓ2 isometry and sharpness conditions.

mod corruption;
mod ensemble;
mod probes;

pub use corruption::{
    ceil_snapped, corrupt, measure, round_half_up, CorruptionModel, Measurements,
    DEFAULT_OUTLIER_VARIANCE,
};
pub use ensemble::{GaussianEnsemble, StorageMode, DEFAULT_MATERIALIZE_LIMIT};
pub use probes::{rip_probe, sharpness_probe, sharpness_ratio, ProbeStats, SQRT_2_OVER_PI};
