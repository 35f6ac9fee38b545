use thiserror::Error;

/// Errors raised while building or evaluating the operator-algebra models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent shapes or parameters in a configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A structural axiom failed (span membership, closure, expectation axioms).
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested model would exceed the configured dimension cap.
    #[error("capacity error: required dimension {required} exceeds cap {cap}")]
    Capacity { required: usize, cap: usize },

    /// Two words of a family violate the separation hypothesis
    /// (distinct words must differ in first and in last index).
    #[error("hypothesis error: words {first} and {second} share a {end} index {index}")]
    Hypothesis {
        first: usize,
        second: usize,
        end: &'static str,
        index: i64,
    },

    /// Truncation at the top Fock level would make the requested identity invalid.
    #[error("truncation error: level {required} exceeds truncation level {max_level}")]
    Truncation { required: usize, max_level: usize },

    /// Operands were built on different Fock contexts or modules.
    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
