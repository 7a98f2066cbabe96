use std::path::PathBuf;

use thiserror::Error;

use crate::synth::Application;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid satisfaction level {0}, expected 1..=5")]
    InvalidLevel(u8),
    #[error("invalid ZoT profile: {0}")]
    InvalidProfile(String),
    #[error("no demand configured for application `{0}`")]
    UnknownApplication(Application),
    #[error("unknown application name `{0}`")]
    UnknownApplicationName(String),
    #[error("persona {0} has an empty daily schedule")]
    EmptySchedule(u32),
    #[error("invalid persona {id}: {reason}")]
    InvalidPersona { id: u32, reason: String },
    #[error("unknown persona id {0}")]
    UnknownPersona(u32),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("requested {clusters} clusters but only {users} users are available")]
    TooManyClusters { clusters: usize, users: usize },
    #[error("sample of user {0} carries no persona label")]
    Unlabeled(u32),
    #[error("model has not been trained")]
    Untrained,
    #[error("instance too large for exhaustive search: {users} users x {rbs} resource blocks")]
    InstanceTooLarge { users: usize, rbs: usize },
    #[error("runs cannot be compared: {0}")]
    Mismatch(String),
    #[error("malformed model file at line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error("malformed record: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
