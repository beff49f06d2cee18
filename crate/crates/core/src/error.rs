use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite cumulant for {family} at theta = {theta}")]
    NonFiniteCumulant { family: &'static str, theta: f64 },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection failed on split {split}: {reason}")]
    SelectionFailed { split: usize, reason: String },

    #[error("not enough splits: need at least {needed}, got {got}")]
    TooFewSplits { needed: usize, got: usize },

    #[error("singular contrast covariance; offending contrast rows {rows:?}")]
    SingularContrast { rows: Vec<usize> },

    #[error("parse error at row {row}, column `{column}`: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable numeric diagnostic code, used as the CLI exit status.
    pub fn code(&self) -> i32 {
        match self {
            Error::Dimension(_) => 10,
            Error::NonFiniteCumulant { .. } => 11,
            Error::RankDeficient(_) => 12,
            Error::InvalidResponse(_) => 13,
            Error::InvalidArgument(_) => 14,
            Error::SelectionFailed { .. } => 20,
            Error::TooFewSplits { .. } => 21,
            Error::SingularContrast { .. } => 30,
            Error::Parse { .. } => 40,
            Error::Format(_) => 41,
            Error::Scenario(_) => 50,
            Error::Config(_) => 51,
            Error::Io(_) => 60,
            Error::Csv(_) => 61,
        }
    }
}
