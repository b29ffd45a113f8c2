use thiserror::Error;

/// Errors raised by the matching pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: n={n}, d={d}")]
    InvalidDimension { n: usize, d: usize },
    #[error("permutation has length {got}, expected {expected}")]
    PermutationLengthMismatch { expected: usize, got: usize },
    #[error("not a permutation: {0}")]
    NotAPermutation(&'static str),
    #[error("matrix is not symmetric (asymmetry {asymmetry:e} relative to norm)")]
    NotSymmetric { asymmetry: f64 },
    #[error("not a distance matrix: {0}")]
    NotDistanceMatrix(&'static str),
    #[error("dimension error: {0}")]
    DimensionError(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("d={d} exceeds the sign enumeration cap of {cap}")]
    DimensionTooLarge { d: usize, cap: usize },
    #[error("cost matrix has a non-finite entry at ({row}, {col})")]
    NonFiniteCost { row: usize, col: usize },
    #[error("brute-force assignment limited to n <= {cap}, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("permutation lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("at least {min} repetitions required, got {got}")]
    InsufficientReps { min: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
