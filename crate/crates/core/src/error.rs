use thiserror::Error;

/// Errors raised by the key-rate library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the physical or mathematical domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// A caller broke an input contract (shape, symmetry, weight normalization).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine produced a result that fails its own sanity checks.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A measurement was requested on a quadrature with zero variance.
    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(String),

    /// A channel class has no configured construction for the requested object.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// A channel or job descriptor could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
