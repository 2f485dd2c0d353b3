use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate code: the parity-check matrix has full column rank, so C(H) = {{0}}")]
    DegenerateCode,

    #[error("enumeration limit {limit} exceeds the {available} nonzero codewords available")]
    LimitTooLarge { limit: u64, available: u64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{what}: size {size} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    EpsilonOutOfRange(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("malformed payload at byte {position}: {reason}")]
    MalformedPayload { position: usize, reason: String },

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("no solution with at most {sparsity} nonzeros reproduces the measurements")]
    NoSparseSolution { sparsity: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
