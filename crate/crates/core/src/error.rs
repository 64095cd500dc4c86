use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient participants: need at least 2, got {0}")]
    InsufficientParticipants(usize),

    #[error("no participants")]
    NoParticipants,

    #[error("invalid question: {0}")]
    InvalidQuestion(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("probability {value} at index {index} is outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },

    #[error("threshold {k} is out of range for {n} trials")]
    ThresholdOutOfRange { k: usize, n: usize },

    #[error("sample size must be at least 1")]
    EmptySample,

    #[error("successes ({successes}) exceed sample size ({n})")]
    TooManySuccesses { successes: u64, n: u64 },

    #[error("degenerate variance")]
    DegenerateVariance,

    #[error("no bets to evaluate")]
    EmptyBetSet,

    #[error("stake must be positive")]
    NonPositiveStake,

    #[error("vig must be in [0, 1), got {0}")]
    InvalidVig(f64),

    #[error("non-finite value for {field}")]
    NonFinite { field: &'static str },

    #[error("fade-low bets require Low confidence records (game {0} is High)")]
    NotLowConfidence(String),

    #[error("row {row}, column `{column}`: {message}")]
    InvalidRecord {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("{0} is empty")]
    EmptyInput(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
