use thiserror::Error;

/// Errors raised by the chaos calculus and the Monte Carlo lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis index {index} exceeds model dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("operation requires the l2 norm, got {0}")]
    UnsupportedNorm(String),

    #[error("operator is not symmetric (key {0})")]
    SymmetryViolation(String),

    #[error("coefficients are not tetrahedral (key {0})")]
    NotTetrahedral(String),

    #[error("time parameter must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("functional has nonzero mean; the inverse generator needs a centered input")]
    NonZeroMean,

    #[error("unknown cell index {index} (model has {cells} cells)")]
    UnknownCell { index: usize, cells: usize },

    #[error("multiplier rule is undefined at chaos order {0}")]
    MultiplierNotTotal(usize),

    #[error("accuracy requirement not met: {0}")]
    Accuracy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
