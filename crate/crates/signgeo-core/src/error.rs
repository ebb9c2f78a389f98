//! Error type shared across the core modules.

use core::fmt;

/// Errors raised by geometry, theory, and perturbation primitives.
///
/// Hand-rolled (no `thiserror`) to stay `no_std`-friendly.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// An operation received a zero vector where a direction is required.
    /// Zero norms are a hard error, never epsilon-regularized: silently
    /// nudging the norm would corrupt radial-fraction statistics.
    ZeroVector,
    /// Two vectors that must share a dimension do not.
    DimMismatch { left: usize, right: usize },
    /// A scalar parameter is outside its mathematical domain.
    OutOfRange {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// A parameter combination violates a model constraint (e.g. k·α² ≥ 1).
    ConstraintViolation(&'static str),
    /// Ternary quantization hit an all-zero row, which has no scale.
    DegenerateRow { row: usize },
    /// An entry/column flip target is outside the matrix.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::ZeroVector => write!(f, "zero vector has no direction"),
            CoreError::DimMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            CoreError::OutOfRange {
                what,
                value,
                expected,
            } => write!(f, "{what} = {value} out of range (expected {expected})"),
            CoreError::ConstraintViolation(msg) => write!(f, "constraint violated: {msg}"),
            CoreError::DegenerateRow { row } => {
                write!(f, "row {row} is all zeros and cannot be scaled")
            }
            CoreError::IndexOutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range for length {len}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
