use thiserror::Error;

/// Errors produced anywhere in the calibration pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error at line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("no records")]
    NoRecords,

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("training error: {0}")]
    Training(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("rank {rank} is outside the calibrated top-{n} range")]
    RankOutOfRange { rank: usize, n: usize },

    #[error("test-split data passed to {0}")]
    Leakage(&'static str),

    #[error("bundle error: {0}")]
    Bundle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
