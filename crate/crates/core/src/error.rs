use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    /// Input outside the domain where the requested quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A computed result contradicts an invariant the algorithm relies on.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SpectraError>;
