use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("linear system is singular")]
    Singular,

    #[error("iteration limit of {0} reached without convergence")]
    IterationLimit(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("contraction hypothesis violated: ||T^-1|| = {0} >= 1")]
    NotContractive(f64),

    #[error("dimension {n} exceeds the enumeration limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("Q - I is singular; the equivalent piecewise linear form is unavailable")]
    EquivalenceUnavailable,

    #[error("generator drew {0} consecutive singular matrices")]
    SingularDraws(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
