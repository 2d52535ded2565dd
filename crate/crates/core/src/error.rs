//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, compilation, simulation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or state had the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// An argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request exceeds a configured resource ceiling.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// An objective or intermediate quantity became non-finite.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A file did not match the expected schema.
    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
