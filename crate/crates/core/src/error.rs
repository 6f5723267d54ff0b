use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not in the domain (|w~|^2 = {reduced_norm_sq})")]
    NotInDomain { reduced_norm_sq: f64 },

    #[error("matrix is not unitary (operator-norm residual {0:e})")]
    NotUnitary(f64),

    #[error("argument {0} is outside the domain of the function")]
    BadArgument(f64),

    #[error("binomial coefficient C({n}, {d}) is undefined or overflows")]
    Binomial { n: u64, d: u64 },

    #[error("trivial weighted space: alpha = {alpha} must exceed m + n = {bound}")]
    TrivialSpace { alpha: f64, bound: usize },

    #[error("finite-difference stencil with step {0:e} leaves the domain")]
    StepTooLarge(f64),

    #[error("|w~|^2 = {0} lies outside the certified region [0, 0.95]")]
    OutOfRegion(f64),

    #[error("truncation exhausted at degree {degree} without a certified tail (relative bound {bound:e})")]
    TruncationExhausted { degree: usize, bound: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("invalid Monte Carlo configuration: {0}")]
    McConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
