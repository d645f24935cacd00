use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamaError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative or adaptive routine failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, FamaError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FamaError::Domain(msg.into()))
}
