use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("point is not in the matricial upper half-plane (min Im eigenvalue {min_im:e}, required {eps:e})")]
    NotInHalfPlane { min_im: f64, eps: f64 },
    #[error("ill-conditioned linear solve (reciprocal condition {rcond:e})")]
    IllConditioned { rcond: f64 },
    #[error("exponent map is numerically singular (condition {cond:e})")]
    SingularExponent { cond: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("map is not completely positive (min Choi eigenvalue {min_eig:e})")]
    NotCompletelyPositive { min_eig: f64 },
    #[error("negative scale factor {0}")]
    NegativeScale(f64),
    #[error("invalid weights: {0}")]
    WeightsInvalid(String),
    #[error("degenerate atoms: {0}")]
    DegenerateAtoms(String),
    #[error("target outside the inversion domain: {0}")]
    OutsideInversionDomain(String),
    #[error("truncated Fock space too large: {rows} rows exceeds cap {cap}")]
    TruncationTooLarge { rows: usize, cap: usize },
    #[error("J-family is not compatible: {0}")]
    IncompatibleSpec(String),
    #[error("moment degree {degree} exceeds truncation length {length}")]
    DegreeExceedsTruncation { degree: usize, length: usize },
    #[error("size {n} exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid input: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of an iterative solver (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::IllConditioned { .. } | Error::SingularExponent { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
