use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A binary container (SPD1/SPM1) failed validation.
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    /// Input data violates a numeric precondition (non-finite values etc).
    #[error("data error: {0}")]
    Data(String),

    /// A caller passed arguments that violate an operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A text file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("image error in {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(message: impl Into<String>) -> Error {
    Error::Argument(message.into())
}
