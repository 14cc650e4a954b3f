use thiserror::Error;

/// Errors raised by the radial model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("potentials live on different grids")]
    GridMismatch,
    /// The envelope or geodesic is identically minus infinity.
    #[error("result is identically -infinity")]
    MinusInfinity,
    #[error("invalid state: {0}")]
    State(String),
    /// Input outside the finite-energy class an operation is defined on.
    #[error("class error: {0}")]
    Class(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("sequence is not Cauchy: gap {gap} has distance {distance:.6e} > bound {bound:.6e}")]
    NotCauchy {
        gap: usize,
        distance: f64,
        bound: f64,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;
