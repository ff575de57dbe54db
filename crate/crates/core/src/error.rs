use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid direction element {0}, expected one of -1, 0, +1")]
    InvalidDirection(i64),

    #[error("invalid head index {0}, expected one of 1, 2, 3")]
    InvalidHeadIndex(usize),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("loss mask selects no entries")]
    DegenerateLoss,

    #[error("invalid action space: {0}")]
    ActionSpace(String),

    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cartesian discretization would create {count} actions (cap {cap})")]
    Blowup { count: u128, cap: u128 },

    #[error("environment protocol violation: {0}")]
    Protocol(String),

    #[error("environment: {0}")]
    Env(String),

    #[error("mdp: {0}")]
    Mdp(String),

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// True for errors raised by the numeric guards (non-finite values).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::DegenerateLoss)
    }
}
