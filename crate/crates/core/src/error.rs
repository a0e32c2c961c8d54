use thiserror::Error;

/// Errors raised by parameter validation and numerical evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension {0}: only ternary (n = 3) grids are supported")]
    UnsupportedDimension(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_same_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
