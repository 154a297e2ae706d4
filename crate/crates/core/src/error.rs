//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model, attack, training and I/O operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input violates a documented precondition.
    #[error("validation failed: {0}")]
    Validation(String),

    /// Configuration is internally inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Encoder does not expose a penultimate feature layer.
    #[error("encoder has no penultimate feature tap: {0}")]
    UnsupportedTap(String),

    /// Adversarial-example generation failed.
    #[error("attack failed at batch index {batch_index}: {reason}")]
    AttackFailure { batch_index: usize, reason: String },

    /// Training aborted mid-run.
    #[error("training aborted at epoch {epoch}, batch {batch}: {reason}")]
    TrainAbort {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    /// Binary file does not match the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// Binary file is structurally valid up to `offset` but damaged there.
    #[error("corrupt data at byte offset {offset}: {reason}")]
    Corruption { offset: u64, reason: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
