use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Input is well-formed but exceeds a configured size limit.
    #[error("limit exceeded: {what} is {actual}, limit is {limit}")]
    LimitExceeded {
        what: &'static str,
        actual: usize,
        limit: usize,
    },
    /// A target set cannot be covered by the available candidates.
    #[error("target is not coverable by the candidate sets")]
    Uncoverable,
    /// A bounded search gave up before finding a witness.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}

pub(crate) fn check_limit(what: &'static str, actual: usize, limit: usize) -> Result<()> {
    if actual > limit {
        Err(Error::LimitExceeded { what, actual, limit })
    } else {
        Ok(())
    }
}
