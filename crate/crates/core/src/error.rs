use thiserror::Error;

use crate::sde::TrajectoryRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: expected nx = {expected}, found nx = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("Poisson solve did not converge: residual {residual:.3e}")]
    PoissonNonConvergence { residual: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("operation not supported for noise kind {kind}: {what}")]
    UnsupportedNoise { kind: String, what: String },

    #[error("integration failed at step {step}: {reason}")]
    Integration {
        step: usize,
        reason: String,
        partial: Box<TrajectoryRecord>,
    },

    #[error("Euler solver: {0}")]
    Euler(String),

    #[error("under-resolved boundary strip: width {width:.3e} < cell size {h:.3e}; use a finer grid")]
    UnderResolved { width: f64, h: f64 },

    #[error("statistics: {0}")]
    Statistics(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
