use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("no points assigned to part {part} in the {which} cloud")]
    NoPartPoints { part: String, which: &'static str },
    #[error("unknown id: {0}")]
    UnknownId(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
