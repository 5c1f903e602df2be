use thiserror::Error;

/// Errors produced by the estimation, sampling and checking routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Some nearest-neighbor distance is exactly zero, so `log rho_i` is undefined.
    #[error("duplicate points at index pairs {pairs:?}")]
    DuplicatePoints { pairs: Vec<(usize, usize)> },

    #[error("invalid density specification: field `{field}`: {reason}")]
    InvalidDensity { field: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("point {x:?} lies outside the support (f(x) = 0)")]
    OutsideSupport { x: Vec<f64> },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("zero realization of the rescaled distance statistic (seed {seed}, rep {rep})")]
    ZeroRealization { seed: u64, rep: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
