use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short to aggregate: need at least {needed} points, got {got}")]
    TooShortToAggregate { needed: usize, got: usize },

    #[error("series too short: {what} needs at least {needed} points, got {got}")]
    SeriesTooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("series `{0}` has no observed values")]
    AllMissing(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("standard sMAPE undefined when forecast and actual are both zero; use suilin variant")]
    UseSuilinVariant,

    #[error("undefined MASE: in-sample scaling denominator is zero")]
    UndefinedMase,

    #[error("design matrix rank-deficient for k = {k}; reduce k")]
    RankDeficient { k: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("column mismatch: model expects {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("cache mismatch: {0}")]
    CacheMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}
