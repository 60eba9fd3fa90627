use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix has rank zero; nothing can be certified")]
    RankZero,

    #[error("rank-deficient design: rank {rank} < {required}; the design is uncertifiable")]
    RankDeficient { rank: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("kernel dimension {dim} exceeds 3; use the randomized witness search instead")]
    KernelTooLarge { dim: usize },

    #[error("enumeration budget exceeded: {count} supports (limit {limit})")]
    BudgetExceeded { count: u128, limit: u128 },

    #[error("certificate is uninformative (S0 = 0)")]
    Uninformative,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
