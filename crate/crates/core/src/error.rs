use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs are shaped inconsistently (size mismatch, malformed data, broken invariant).
    #[error("structural error: {0}")]
    Structural(String),

    /// A parameter lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a configured size guard.
    #[error("capacity exceeded: {what} (limit {limit}, reached {reached})")]
    Capacity {
        what: String,
        limit: usize,
        reached: usize,
    },

    /// An iterative method failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Random sampling produced an ambiguous spectrum; a re-draw with a new seed may succeed.
    #[error("degenerate draw: {0}")]
    Degeneracy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
