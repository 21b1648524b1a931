use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Clap(clap::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Numerical(String),

    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 1 configuration, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Io { .. } => 2,
        }
    }
}

impl From<fermi_landauer::Error> for CliError {
    fn from(err: fermi_landauer::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else {
            CliError::Config(err.to_string())
        }
    }
}
