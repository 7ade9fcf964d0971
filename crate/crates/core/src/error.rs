use thiserror::Error;

pub type Result<T> = std::result::Result<T, LlipError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlipError {
    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at point {index}")]
    NonFiniteValue { index: usize },

    #[error("no pair of grid points lies within adjacency radius {radius}")]
    EmptyAdjacency { radius: f64 },

    #[error("grid mismatch: expected grid {expected}, found {found}")]
    GridMismatch { expected: String, found: String },

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("function is not in the domain of the sample operator")]
    NotInDomain,

    #[error("invalid saturation constant k = {0}; must be > 0")]
    InvalidK(f64),

    #[error(
        "operator is not diagonal at point {index}: coincident inputs map to outputs \
         differing by {spread}"
    )]
    IllDefinedAtPoint { index: usize, spread: f64 },

    #[error("bound function is negative at point {index} ({value})")]
    NegativeBound { index: usize, value: f64 },

    #[error("at least {required} samples required, found {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error("Lipschitz constant must be non-negative, got {0}")]
    NegativeLipschitz(f64),

    #[error("probe pair {index} is degenerate: the two functions coincide")]
    DegenerateProbe { index: usize },

    #[error("composed slice needs {needed} breakpoints, cap is {cap}")]
    BreakpointOverflow { needed: usize, cap: usize },

    #[error("invalid piecewise-linear function: {0}")]
    InvalidPwl(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),
}
