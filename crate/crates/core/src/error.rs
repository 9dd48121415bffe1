use thiserror::Error;

use crate::certified_eval::EvalError;

/// Errors from the analysis modules. Evaluation failures are wrapped as-is.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("sequence of length {len} is shorter than the window length {k}")]
    WindowTooShort { len: usize, k: usize },
    #[error("block length must be at least 1")]
    ZeroBlockLength,
    #[error("symbol {symbol} at position {index} is not below the modulus {m}")]
    SymbolOutOfRange { index: usize, symbol: u32, m: u64 },
    #[error("modulus {m} is too small (need at least {min})")]
    ModulusTooSmall { m: u64, min: u64 },
    #[error("modulus {m} is too large (at most {max})")]
    ModulusTooLarge { m: u64, max: u64 },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("histograms have different shapes")]
    ShapeMismatch,
    #[error("block of length {needed} does not fit in length {len}")]
    LengthTooShort { len: usize, needed: usize },
    #[error("alpha must be irrational")]
    RationalAlpha,
    #[error("fewer than two hits in the scanned range")]
    EmptyHitSet,
    #[error("point set is empty")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point set too large for brute force ({n} points, limit {limit})")]
    TooLarge { n: usize, limit: usize },
    #[error("frequency vector is zero")]
    ZeroFrequency,
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("side condition violated: {0}")]
    SideConditionViolated(String),
    #[error("perturbation exceeds delta at index {index}")]
    DeltaViolated { index: usize },
    #[error("bad rational approximation: {0}")]
    BadApproximation(String),
    #[error("polynomial degree must be at least 1")]
    DegreeZero,
    #[error("p and q must be distinct")]
    EqualPrimes,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("alpha must not be an integer")]
    IntegerAlpha,
    #[error("checkpoints out of range: {0}")]
    ChecksOutOfRange(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for certification failures rather than bad input.
    pub fn is_ambiguity(&self) -> bool {
        matches!(self, Error::Eval(e) if e.is_ambiguity())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
