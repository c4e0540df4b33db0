//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library layers.
///
/// The CLI maps these onto process exit codes: validation-class errors
/// (`Shape`, `Domain`, `Validation`, `Io`, `Format`) exit 2, `Capacity`
/// exits 3 and `Numeric` exits 4.
#[derive(Debug, Error)]
pub enum AqtError {
    /// Operand dimensions are incompatible.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Result would exceed a configured dense-size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A numeric routine failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// User-supplied configuration or arguments are inconsistent.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AqtError>;

impl AqtError {
    /// Process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            AqtError::Capacity(_) => 3,
            AqtError::Numeric(_) => 4,
            _ => 2,
        }
    }
}
