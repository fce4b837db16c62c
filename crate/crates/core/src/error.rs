use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular (pivot magnitude {pivot:e} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("imaginary part of tau is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("genus {0} is outside the supported range 1..=4")]
    UnsupportedGenus(usize),

    #[error("genus mismatch: expected {expected}, found {found}")]
    GenusMismatch { expected: usize, found: usize },

    #[error("matrix is not symplectic")]
    NotSymplectic,

    #[error("lattice box radius {required} exceeds the cap {max_radius}")]
    TruncationOverflow { required: u64, max_radius: u32 },

    #[error("|Im z| = {0} exceeds the supported bound 10")]
    ArgumentOutOfRange(f64),

    #[error("all nullwert components are negligible (max modulus {0:e})")]
    NegligibleNullwert(f64),

    #[error("transformed characteristic is not even: {0}")]
    NotEven(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
