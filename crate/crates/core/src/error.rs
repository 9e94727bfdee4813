use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value failed structural validation (e.g. masses not summing to one).
    #[error("validation error: {0}")]
    Validation(String),
    /// A construction needs a larger time or horizon than allowed.
    #[error("capacity error: {message} (required n = {required})")]
    Capacity { message: String, required: u64 },
    /// A construction could not certify its claims after all retries.
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
