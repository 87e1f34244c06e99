use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("multiplier is not even in n but input is hermitian")]
    OddMultiplier,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("block index {0} out of range")]
    BlockIndex(i32),
    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
