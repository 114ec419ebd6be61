use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The target algebra is not invariant under the modular group of the
    /// state, so no state-preserving conditional expectation onto it exists.
    #[error("subalgebra is not modular invariant (residual {0:e})")]
    NotExpectation(f64),

    #[error("internal numerical failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

pub(crate) fn size(msg: impl Into<String>) -> Error {
    Error::Size(msg.into())
}
