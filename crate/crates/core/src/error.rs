use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// A table that should be a probability mass function is not one.
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    /// Operation expected one source family and received the other.
    #[error("family mismatch: expected {expected}, got {got}")]
    FamilyMismatch { expected: String, got: String },

    /// Input batch or table does not have the shape the operation needs.
    #[error("invalid shape: {0}")]
    Shape(String),

    /// A size or memory guard was exceeded.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Undefined result, e.g. a bound whose denominator vanishes.
    #[error("undefined: {0}")]
    Undefined(String),

    /// A scheme failed inside a Monte Carlo trial.
    #[error("trial {index}: {source}")]
    Trial {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::ParameterDomain(msg.into())
}
