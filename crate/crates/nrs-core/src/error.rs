//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, NrsError>;

#[derive(Debug, Error)]
pub enum NrsError {
    /// Tensor shapes do not line up for the requested operation.
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Invalid hyperparameter or model configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An operation was called out of order (e.g. backward before forward).
    #[error("invalid state: {0}")]
    State(String),

    /// Batch statistics are undefined for this batch size.
    #[error("batch of size {0} is too small for training-mode batch norm (need >= 2)")]
    BatchSize(usize),

    /// Classification label outside 0..k-1.
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    /// A gradient or parameter became non-finite.
    #[error("non-finite value in parameter block '{0}'")]
    Numeric(String),

    /// Malformed dataset file.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Malformed or incompatible checkpoint.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NrsError {
    pub(crate) fn dim(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        NrsError::Dimension {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }
}
