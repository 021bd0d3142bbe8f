use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} = {value} is outside the allowed range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("variable groups overlap at index {0}")]
    OverlappingGroups(usize),

    #[error("variable index {index} out of range for a joint over {vars} variables")]
    BadVariable { index: usize, vars: usize },

    #[error("mutual information {0:e} is negative beyond rounding; the joint is inconsistent")]
    NegativeInformation(f64),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("source has empty support")]
    EmptySupport,

    #[error("polytope is unbounded along coordinate {0}")]
    Unbounded(usize),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("malformed pattern: {0}")]
    MalformedPattern(String),

    #[error("source is not Markov through its common part: I(S1;S2|S0) = {0:e}")]
    NotMarkov(f64),

    #[error("S1 is not a deterministic function of S2: H(S1|S2) = {0:e}")]
    NotDeterministicFunction(f64),

    #[error("receiver 2 is not (evidently) more capable than receiver 1: {0}")]
    NotMoreCapable(String),

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
