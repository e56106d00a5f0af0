//! Crate-wide error type.

/// Errors produced by corrkit operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor was handed data that violates a type invariant.
    #[error("construction error: {0}")]
    Construction(String),

    /// An operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A binary container could not be decoded. `offset` is the byte position
    /// at which decoding failed.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    /// A text format could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A metric had no data to aggregate over.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Robust model fitting could not produce a model.
    #[error("estimation error: {0}")]
    Estimation(String),
}

impl Error {
    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
