use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("invalid grammar `{language}`: {reason}")]
    Grammar { language: String, reason: String },

    #[error("record {index}: {reason}")]
    Schema { index: usize, reason: String },

    #[error("unsupported level `{0}`")]
    UnsupportedLevel(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no tag record for instruction {0}")]
    MissingTags(String),

    #[error("unlabeled structure groups: {}", .0.join(", "))]
    MissingLabels(Vec<String>),

    #[error("nothing to explain")]
    NothingToExplain,

    #[error("exact mode supports at most {max} tokens (got {got}); use sampled mode")]
    TooManyPlayers { max: usize, got: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), cause: source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
