use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input vector violates its documented contract.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Inference reached a state with no probability mass left to normalize.
    #[error("degenerate state: {0}")]
    Degenerate(String),

    /// Frames were pushed out of order or with gaps.
    #[error("frame out of sequence: expected index {expected}, got {got}")]
    Sequencing { expected: u64, got: u64 },

    /// A text file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A file is well-formed line by line but inconsistent as a whole.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
