use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("missing series {0}")]
    MissingSeries(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error(transparent)]
    Core(#[from] snnbound::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for missing or malformed data, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use snnbound::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::MissingSeries(_) | CliError::Csv { .. } => 3,
            CliError::Io { .. } => 3,
            CliError::Core(E::Data(_) | E::Parse { .. } | E::Io(_) | E::InvalidTask(_) | E::Checkpoint(_)) => 3,
            CliError::Core(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Csv { path, source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
