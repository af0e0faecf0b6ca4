use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or shape mismatch detected before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),

    /// Non-finite values or other numeric failures at runtime.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training aborted; carries the diagnostic record of the failing step.
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: u64, detail: String },

    /// A persisted artifact (checkpoint, bitstream) failed validation.
    #[error("corrupt or incompatible file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
