use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Every precondition failure maps to exactly one variant so that front ends
/// can translate them into stable exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capacity exceeded: {what} requires {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index {index} out of bounds for length {len}")]
    Bounds { index: usize, len: usize },
    #[error("resolution error: {0}")]
    Resolution(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for errors caused by resource limits rather than bad parameters.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
