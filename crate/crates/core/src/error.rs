use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),

    #[error("user `{0}` has an empty trace")]
    EmptyTrace(String),

    #[error("timestamp {timestamp} outside dataset period [{start}, {end})")]
    OutsidePeriod {
        timestamp: String,
        start: String,
        end: String,
    },

    #[error("timestamp {timestamp} precedes period start {start}")]
    BeforePeriod { timestamp: String, start: String },

    #[error("unknown spatial level `{0}`")]
    UnknownLevel(String),

    #[error("tower `{tower}` unmapped at {level}")]
    UnmappedTower { tower: String, level: String },

    #[error("tower `{tower}` mapped inconsistently at {level}")]
    InconsistentTower { tower: String, level: String },

    #[error(transparent)]
    NestingViolation(Box<NestingViolation>),

    #[error("utility score {score} for {profile} outside [1, 10]")]
    ScoreOutOfRange { profile: String, score: f64 },

    #[error("duplicate utility entry for {0}")]
    DuplicateProfile(String),

    #[error("no utility for {0}")]
    MissingUtility(String),

    #[error("no user has a trace of at least {p} points (largest is {max_trace_size})")]
    NoEligibleUsers { p: u32, max_trace_size: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Two towers sharing a fine zone but mapped to different coarse zones.
/// Boxed inside [`Error`] to keep the enum small.
#[derive(Debug, Error)]
#[error(
    "nesting violation between {fine_level} and {coarse_level}: towers `{tower_a}` and \
     `{tower_b}` share zone `{zone}` but fall in `{parent_a}` and `{parent_b}`"
)]
pub struct NestingViolation {
    pub fine_level: String,
    pub coarse_level: String,
    pub zone: String,
    pub tower_a: String,
    pub tower_b: String,
    pub parent_a: String,
    pub parent_b: String,
}
