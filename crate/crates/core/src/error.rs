use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero polynomial is not allowed here")]
    ZeroPolynomial,

    #[error("polynomial is not harmonic (laplacian residual {residual:.3e})")]
    NonHarmonic { residual: f64 },

    #[error("polynomial has a constant term; measures require h(0) = 0")]
    NonZeroAtOrigin,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("floating-point range exceeded: {0}")]
    Overflow(String),

    #[error("scan grid too coarse: need at least {min} steps, got {got}")]
    GridTooCoarse { min: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("ball exceeds the validity region of the particle cloud")]
    RegionExceeded,

    #[error("result is inconclusive: {0}")]
    Inconclusive(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal solver failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
