use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph construction failed: {0}")]
    Construction(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vertex set does not lie on a single side: {0}")]
    SideMismatch(String),

    #[error("outside the formula's regime: {0}")]
    Regime(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
