use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for ground set of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("vector {index} has length {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("vector {0} has a non-finite entry")]
    NonFinite(usize),

    #[error("{count} vectors selected but the ambient dimension is {dim}")]
    TooManyVectors { count: usize, dim: usize },

    #[error("selected vectors are linearly dependent")]
    RankDeficient,

    #[error("invalid matroid: {0}")]
    InvalidMatroid(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("no independent set of full rank has nonzero volume")]
    Infeasible,

    #[error("iteration cap of {cap} exchanges reached before termination")]
    IterationCap { cap: usize },

    #[error("solver invariant violated: {0}")]
    InvariantViolation(String),

    #[error("brute-force enumeration exceeded the cap of {cap} bases")]
    OracleCapExceeded { cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
