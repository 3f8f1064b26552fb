//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reduction over an empty range")]
    EmptyReduction,

    #[error("backing allocation of {requested} bytes failed")]
    BackingAllocationFailed { requested: usize },

    #[error("memory pool exhausted: requested {requested} bytes ({available} available)")]
    PoolExhausted { requested: usize, available: usize },

    #[error("double free of pool block {id}")]
    DoubleFree { id: u64 },

    #[error("unknown pool block handle {id}")]
    UnknownHandle { id: u64 },

    #[error("{what} is not implemented")]
    NotImplemented { what: &'static str },

    #[error("length mismatch: {left} vs {right} in {context}")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("division by zero at entry {index}")]
    DivisionByZero { index: usize },

    #[error("zero or invalid pivot at cell {cell} while factorizing ({value})")]
    ZeroPivot { cell: usize, value: f64 },

    #[error("solver breakdown: {reason}")]
    Breakdown { reason: &'static str },

    #[error("zero diagonal at cell {cell}")]
    ZeroDiagonal { cell: usize },

    #[error("invalid matrix addressing: {reason}")]
    InvalidAddressing { reason: String },

    #[error("non-positive input: {what} = {value}")]
    NonPositiveInput { what: &'static str, value: f64 },

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {format} data: {reason}")]
    Parse { format: &'static str, reason: String },
}
