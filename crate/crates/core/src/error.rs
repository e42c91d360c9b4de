use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate window: |U| + |W| = {0} is not below 1")]
    DegenerateWindow(String),

    #[error("coefficient size limit exceeded at iterate n = {n}")]
    Overflow { n: u64 },

    #[error("witness unavailable: {0}")]
    WitnessUnavailable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("scenario error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Scenario { line: Option<usize>, msg: String },

    #[error("certificate schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
