use thiserror::Error;

/// Errors produced by the simulator and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no sign change of the balance function in [{lo}, {hi}] MHz")]
    NoBracket { lo: f64, hi: f64 },

    #[error("direction vector is not normalized (|d| = {0})")]
    NonUnitDirection(f64),

    #[error("mean spin vector vanishes; squeezing parameter undefined")]
    ZeroMeanVector,

    #[error("pulses combined P = {p} out of range 1..={max}")]
    PulsesOutOfRange { p: usize, max: usize },

    #[error("run in cycle {cycle}, slot {slot} has no predecessor in the previous cycle")]
    MissingPredecessor { cycle: u64, slot: u8 },

    #[error("bin {index} holds {size} pairs; at least 2 are required")]
    EmptyBin { index: usize, size: usize },

    #[error("bin count {0} outside 5..=30")]
    BinCount(usize),

    #[error("rank-deficient quadratic fit: {0}")]
    RankDeficient(String),

    #[error("non-positive value where a positive one is required: {0}")]
    NonPositive(String),

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("malformed campaign row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
