use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {coord} outside [1, {n}]")]
    CoordinateOutOfRange { coord: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed spec: {0}")]
    MalformedSpec(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{what} exceeds capacity (limit {limit})")]
    Capacity { what: String, limit: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
