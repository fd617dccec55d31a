use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] comb_stats::Error),

    /// Work finished but the result failed its own check.
    #[error("{0}")]
    Unconverged(String),
}

impl CliError {
    /// 2 input, 3 resource cap, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use comb_stats::Error as E;
        match self {
            CliError::Model(E::CapExceeded { .. }) => 3,
            CliError::Model(E::Numeric(_) | E::NoConvergence { .. }) | CliError::Unconverged(_) => {
                4
            }
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Input(msg.into()))
}
