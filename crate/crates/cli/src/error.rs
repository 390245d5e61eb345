use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}:{line}: {message}")]
    DataAt { path: PathBuf, line: u64, message: String },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{failed} of {total} seeds failed; first: {first}")]
    Seeds {
        failed: usize,
        total: usize,
        first: String,
        code: i32,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 1 for configuration problems, 2 for data problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::DataAt { .. } | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Seeds { code, .. } => *code,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<pppl_core::Error> for CliError {
    fn from(e: pppl_core::Error) -> Self {
        use pppl_core::Error as E;
        match e {
            E::Config(_) => CliError::Config(e.to_string()),
            E::Shape(_) | E::Data(_) | E::DegenerateSeries(_) => CliError::Data(e.to_string()),
            E::Numerical(_) | E::Degenerate { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
