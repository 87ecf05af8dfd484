use thiserror::Error;

/// Errors raised by construction, parsing and checking routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Family and rank combination outside the supported range.
    #[error("{0}")]
    Range(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid flag: {0}")]
    Theta(String),
    #[error("parameter error: {0}")]
    Params(String),
    #[error("metric is not positive definite: {0}")]
    Positivity(String),
    #[error("matrix is not orthogonal: {0}")]
    NotOrthogonal(String),
    #[error("metric operator is not invariant: {0}")]
    NotInvariant(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
