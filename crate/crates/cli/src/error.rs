use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: cms_bnp::Error,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(cms_bnp::Error),
}

impl CliError {
    /// 0 ok, 1 usage, 2 I/O, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::File { .. } | CliError::Input { .. } | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                cms_bnp::Error::InvalidArgument(_) => 1,
                cms_bnp::Error::Parse { .. } | cms_bnp::Error::Io(_) => 2,
                cms_bnp::Error::Numeric(_) => 3,
            },
        }
    }
}

impl From<cms_bnp::Error> for CliError {
    fn from(e: cms_bnp::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}
