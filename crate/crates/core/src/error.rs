use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one exit-code class
/// of the command-line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid graph: {0}")]
    Validation(String),

    #[error("transform rejected: {0}")]
    Transform(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value {what}")]
    NonFinite { what: String },

    #[error("plan contract violated: {0}")]
    PlanContract(String),

    #[error("cannot prune {requested} weights, only {available} remain unmasked")]
    OverPrune { requested: usize, available: usize },

    #[error("weights: {0}")]
    Weights(String),

    #[error("trace too short: {len} inferences, one cycle needs {cycle}")]
    TraceTooShort { len: usize, cycle: usize },

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
