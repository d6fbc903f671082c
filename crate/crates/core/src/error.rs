use thiserror::Error;

/// Errors raised by the library. Property violations (a pair that does not
/// tile, a conjecture that fails) are reported through result values, not
/// through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not allowed (need 2 <= M <= 2^32)")]
    InvalidModulus(u64),
    #[error("{d} does not divide {m}")]
    NotADivisor { d: u64, m: u64 },
    #[error("element {x} is outside Z_{m}")]
    OutOfRange { x: u64, m: u64 },
    #[error("element {0} appears twice in a set")]
    DuplicateElement(u64),
    #[error("operands live in Z_{left} and Z_{right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("weight vector has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("direction {i} out of range (K = {k})")]
    BadDirection { i: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("not a tiling: {}", .0.summary())]
    NotATiling(Box<crate::tiling::VerifyReport>),
    #[error("search budget of {0} nodes exhausted")]
    BudgetExceeded(u64),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
