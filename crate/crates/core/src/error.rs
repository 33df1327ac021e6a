use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("ring mismatch: {0}")]
    RingMismatch(String),
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("matrix is not invertible over its ring")]
    NotInvertible,
    #[error("matrix is not in SL (determinant is not 1)")]
    NotInSL,
    #[error("sequence is not unimodular")]
    NotUnimodular,
    #[error("sequence of length {len} is too short: need more than {stable_range}")]
    LengthTooShort { len: usize, stable_range: usize },
    #[error("no reduction exists: {0}")]
    NotReducible(String),
    #[error("stacked block matrix is not unimodular")]
    StackNotUnimodular,
    #[error("no pivot completion: {0}")]
    PivotUnavailable(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("precondition delta < epsilon violated")]
    DeltaNotBelowEpsilon,
    #[error("comparison undecidable after {0} refinement steps")]
    Undecidable(u32),
    #[error("modulus {0} is not a prime")]
    NotPrime(u64),
    #[error("graph too large: {0}")]
    SizeOverflow(String),
    #[error("strategy unavailable: {0}")]
    StrategyUnavailable(String),
    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// Errors that describe a mathematical property of the input (CLI exit code 2).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::NotInvertible
                | Error::NotInSL
                | Error::NotUnimodular
                | Error::NotReducible(_)
                | Error::StackNotUnimodular
                | Error::PivotUnavailable(_)
                | Error::DeltaNotBelowEpsilon
                | Error::Undecidable(_)
                | Error::LengthTooShort { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
