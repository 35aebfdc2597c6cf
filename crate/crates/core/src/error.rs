use thiserror::Error;

/// Errors raised by the optimization library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel matrix is not positive definite ({0}); merge duplicate points first")]
    NotPositiveDefinite(String),

    #[error("point {point:?} lies outside the domain of `{objective}`")]
    OutOfDomain { objective: String, point: Vec<f64> },

    #[error("objective `{0}` has no known maximum")]
    MissingKnownMax(String),

    #[error("objective evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
