use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two bit vectors (or a vector and a codebook) disagree on length.
    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// An enumeration or allocation would exceed the configured cap.
    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}{}",
            advice.as_ref().map(|a| format!(" ({a})")).unwrap_or_default())]
    Capacity {
        what: &'static str,
        needed: u128,
        cap: u128,
        advice: Option<String>,
    },

    /// A bound or construction has no finite solution for these parameters.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
