use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (length mismatch, invalid
    /// settings, degenerate interval, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric input was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// `restore_best` was called before any training step ran.
    #[error("no training history: restore_best called before any step")]
    EmptyHistory,

    /// Malformed PPM stream.
    #[error("ppm format error: {0}")]
    Format(String),

    /// A training run produced a non-finite loss and was aborted.
    /// `step` is the 1-based step at which the loss blew up.
    #[error("non-finite loss at step {step}")]
    DivergedAt { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
