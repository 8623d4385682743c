use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A structural constraint on a model or config is violated
    /// (group divisibility, empty widths, non-finite entries, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// Cut enumeration would exceed the requested cap.
    #[error("enumeration would produce {predicted} cuts, cap is {cap}")]
    EnumerationOverflow { predicted: u128, cap: u64 },

    /// A text artifact (model file, cut file, config) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Training or evaluation produced a non-finite quantity.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
