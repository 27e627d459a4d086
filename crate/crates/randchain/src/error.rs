use thiserror::Error;

/// Errors surfaced by the library. Verification skips (`PremiseNotMet`,
/// `DegenerateInput`) are separated from hard failures so callers can
/// distinguish "case does not apply" from "something is wrong".
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not stochastic: {0}")]
    NonStochastic(String),
    #[error("vector is not stochastic: {0}")]
    NonStochasticVector(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds the cut enumeration cap {cap}; use sampled cuts")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("unknown canned model `{0}`")]
    UnknownExample(String),
    #[error("gossip weight {0} outside the allowed band [{1}, {2}]")]
    WeightOutOfRange(f64, f64, f64),
    #[error("no epsilon-delta accumulation time found below horizon {0}")]
    HorizonExhausted(u64),
    #[error("no common steady state vector fits all expected matrices within tolerance")]
    NoCommonSteadyState,
    #[error("missing hypothesis for the decay audit: {0}")]
    MissingHypothesis(String),
    #[error("instance premise not met: {0}")]
    PremiseNotMet(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
