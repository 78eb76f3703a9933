use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid image dimensions {width}x{height} for {len} samples")]
    InvalidDimensions { width: usize, height: usize, len: usize },

    #[error("image {width}x{height} is too small for {levels} levels (each side must be a multiple of {required})")]
    ImageTooSmall { width: usize, height: usize, levels: usize, required: usize },

    #[error("levels must be at least 1")]
    ZeroLevels,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("expected {expected} subbands, got {actual}")]
    BandCount { expected: usize, actual: usize },

    #[error("unsupported noise distribution {0:?}")]
    UnsupportedDistribution(String),

    #[error("unknown filter realization {0:?}")]
    UnknownRealization(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Gram matrix is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("gradient descent diverged after {iterations} iterations: residual {residual:e} (initial {initial:e}); mu * lambda_max = {spectral_bound:.4} must stay below 2")]
    Diverged { iterations: usize, residual: f64, initial: f64, spectral_bound: f64 },

    #[error("unsupported cost query: {0}")]
    UnsupportedQuery(String),

    #[error("dense oracle limited to {max} pixels, got {actual}")]
    OracleTooLarge { max: usize, actual: usize },

    #[error("malformed subband dump: {0}")]
    MalformedDump(String),
}
