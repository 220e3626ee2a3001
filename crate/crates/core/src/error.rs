use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on
    /// (index out of range, length mismatch, negative threshold).
    #[error("input domain: {0}")]
    InputDomain(String),
    /// A brute-force routine was asked for an instance beyond its limits.
    #[error("infeasible: {0}")]
    Feasibility(String),
    /// A protocol tree contains a query the operation cannot handle.
    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),
    /// Bad parameters or an unknown workload name.
    #[error("configuration: {0}")]
    Config(String),
    /// An internal invariant was observed to fail.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::InputDomain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
