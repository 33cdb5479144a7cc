use thiserror::Error;

use crate::solvers::TraceRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank mismatch: {0}")]
    Rank(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not orthonormal (residual {residual:.3e})")]
    NotOrthonormal { residual: f64 },

    #[error("retraction failed: smallest singular value {sigma_min:.3e} at factor {factor}")]
    Retraction { factor: usize, sigma_min: f64 },

    #[error("solver diverged at iteration {t}: {reason}")]
    Diverged {
        t: usize,
        reason: String,
        trace: Vec<TraceRecord>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn rank(msg: impl Into<String>) -> Self {
        Error::Rank(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
