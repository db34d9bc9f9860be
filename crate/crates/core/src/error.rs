use thiserror::Error;

use crate::solvers::SolverStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column}, condition estimate {condition:.3e})")]
    Singular {
        column: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("solver finished with status {status:?}: {detail}")]
    Solver { status: SolverStatus, detail: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("all {count} candidate fits failed; first error: {first}")]
    AllFitsFailed { count: usize, first: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
