use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("match {match_id}: unknown robot `{robot}`")]
    UnknownRobot { match_id: String, robot: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{source_name}, line {line}: {message}")]
    Malformed {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("no matches left after applying exclusions")]
    EmptyDataset,

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("credential rejected: {0}")]
    Credential(String),

    #[error("unexpected response schema: field `{field}`")]
    Schema { field: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownRobot { .. } => "unknown_robot",
            Error::Validation(_) => "validation",
            Error::Malformed { .. } => "malformed",
            Error::EmptyDataset => "empty_dataset",
            Error::Selection(_) => "selection",
            Error::Transport(_) => "transport",
            Error::Credential(_) => "credential",
            Error::Schema { .. } => "schema",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
