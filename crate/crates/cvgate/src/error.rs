use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("degenerate outcome: {0}")]
    Degenerate(String),
    #[error("unreachable gate: {0}")]
    Unreachable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
