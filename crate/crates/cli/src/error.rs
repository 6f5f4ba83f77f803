use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("ternary plots need 3 strategies, got {found}")]
    Dimension { found: usize },

    #[error(transparent)]
    Core(#[from] evodyn_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input, 2 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        use evodyn_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 1,
            CliError::Core(
                E::InvalidConfig { .. }
                | E::InvalidSimplex(_)
                | E::InvalidLandscape(_)
                | E::DimensionMismatch { .. }
                | E::BetaSingularity { .. },
            ) => 1,
            CliError::Core(_) | CliError::Dimension { .. } | CliError::Io { .. } => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
