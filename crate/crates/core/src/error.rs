use num_bigint::BigUint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(
        "horizon {requested} exceeds the explicit materialization cap of {cap} bits; \
         use an interval-symbolic or structured descriptor"
    )]
    HorizonOverflow { requested: BigUint, cap: u64 },

    #[error("combined period {0} exceeds the symbolic period limit")]
    PeriodTooLarge(u64),

    #[error("set is finite: {0}")]
    FiniteSet(String),

    #[error("index {index} is beyond the end of a finite set with {size} elements")]
    IndexOutOfRange { index: u64, size: BigUint },

    #[error("no element of index {0} found within the search limit")]
    SearchExhausted(u64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("X has only {have} elements below the horizon (need at least {need})")]
    TooSparse { have: u64, need: u64 },

    #[error("band violation at interval {index}: {detail}")]
    Band { index: usize, detail: String },

    #[error("threshold not met: {0}")]
    Threshold(String),

    #[error("splitter oracle exhausted at stage {stage} after {attempts} attempts: {detail}")]
    OracleExhausted {
        stage: usize,
        attempts: usize,
        detail: String,
    },

    #[error("level-selection residual {residual} above tolerance {tolerance}; trace: {trace}")]
    Residual {
        residual: String,
        tolerance: String,
        trace: String,
    },

    #[error("invalid relational system: {0}")]
    InvalidSystem(String),

    #[error("domination hypothesis fails at n = {0}")]
    Hypothesis(u64),

    #[error("no escape index within horizon: {0}")]
    NoEscape(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
