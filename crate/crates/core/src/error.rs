//! Error type shared across the crate.

/// Errors produced by tensor construction, constraint-surface operations and
/// the solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("multi-index {index:?} out of range for dimension {dim}")]
    IndexOutOfRange { index: Vec<usize>, dim: usize },

    #[error("duplicate entry for multi-index {0:?}")]
    DuplicateEntry(Vec<usize>),

    #[error("multi-index of length {got} does not match tensor order {order}")]
    OrderMismatch { order: usize, got: usize },

    /// The constraint form evaluated to a non-positive value on a nonzero
    /// vector, i.e. the form is not positive definite on this input.
    #[error("constraint form is not positive on a nonzero vector (value {0})")]
    NonPositiveForm(f64),

    #[error("zero vector")]
    ZeroVector,

    #[error("point is off the feasible surface: |phi(x) - 1| = {0:.3e}")]
    InfeasiblePoint(f64),

    #[error("previous gradient is zero at iteration {0}")]
    ZeroPreviousGradient(usize),

    #[error("zero search direction")]
    ZeroDirection,

    #[error("curve search failed after {0} backtracks")]
    LineSearchFailed(u32),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
