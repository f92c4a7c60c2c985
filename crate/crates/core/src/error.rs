use thiserror::Error;

/// Errors raised across the decoy-state pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The source triple cannot support the reduced system (ordering or
    /// condition violated, or a vanishing elimination denominator).
    #[error("inadmissible source triple: {0}")]
    InadmissibleTriple(String),

    #[error("undefined bound: {0}")]
    UndefinedBound(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
