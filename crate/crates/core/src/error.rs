use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid return {value} at position {index}: returns must be greater than -1")]
    InvalidReturn { index: usize, value: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient history for {ticker}: {detail}")]
    InsufficientHistory { ticker: String, detail: String },

    #[error("missing price for {ticker} on {date}")]
    MissingData { ticker: String, date: NaiveDate },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cosine similarity is undefined for a zero vector")]
    UndefinedSimilarity,

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("invalid number {0}: value must be finite")]
    InvalidNumber(f64),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid signal context: {0}")]
    InvalidContext(String),

    #[error("LLM transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("could not parse a decision ({reason})")]
    DecisionParse { reason: String, raw: String },

    #[error("score {score} for {id} is outside 0..=10")]
    ScoreRange { id: String, score: i64 },

    #[error("explanations left unscored after re-request: {0:?}")]
    Unscored(Vec<String>),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("{path}:{line}: parse error: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}:{line}: integrity error: {message}")]
    Integrity { path: PathBuf, line: u64, message: String },

    #[error("{path}:{line}: validation error: {message}")]
    Validation { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Whether a retry has any chance of succeeding.
    pub fn is_transient(&self) -> bool {
        matches!(self, Error::Transport { .. })
    }
}
