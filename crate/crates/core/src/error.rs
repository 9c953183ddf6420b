//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input matrix or vector contains NaN or infinite entries.
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    /// Dimensions of two operands do not agree.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A precondition on input data failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The supplied point does not satisfy the KKT residual tolerance.
    #[error("point is not a KKT pair: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotKkt { residual: f64, tol: f64 },

    /// A matrix that must be inverted is numerically singular.
    #[error("singular matrix in {0}")]
    Singular(&'static str),

    /// An enumeration scheme would exceed its element budget.
    #[error("sampling budget exceeded: {needed} elements requested, limit {limit}")]
    BudgetExceeded { needed: usize, limit: usize },

    /// Unknown builtin instance name.
    #[error("unknown instance: {0}")]
    UnknownInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
