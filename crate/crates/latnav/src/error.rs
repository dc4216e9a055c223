use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: latnav_core::Error,
    },
    #[error("workspace: {0}")]
    Workspace(String),
    #[error("checkpoint hash mismatch: bank expects {expected}, workspace has {found}")]
    HashMismatch { expected: String, found: String },
    #[error(transparent)]
    Core(#[from] latnav_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 1 usage, 2 stage failure, 3 data error.
    pub fn exit_code(&self) -> i32 {
        use latnav_core::Error as C;
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Stage { .. } => 2,
            Error::Core(C::Diverged(_) | C::Degenerate(_) | C::Precondition(_)) => 2,
            _ => 3,
        }
    }
}
