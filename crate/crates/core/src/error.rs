use thiserror::Error;

/// Errors raised by the library layers (model, oracle, Monte Carlo, bounds).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A closed form was requested outside the hypotheses under which it holds.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Exhaustive enumeration refused because N is above the guard.
    #[error("N = {n} exceeds the enumeration guard {guard}; use Monte Carlo estimation instead")]
    Capability { n: u32, guard: u32 },

    /// A Monte Carlo accumulator was asked for a quantity it did not record.
    #[error("query error: {0}")]
    Query(String),

    /// The requested work exceeds a configured resource ceiling.
    #[error("resource guard: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}
