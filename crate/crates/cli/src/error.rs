use std::path::Path;

use thiserror::Error;

/// Exit code for usage and validation failures.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for everything else that goes wrong.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] fgd_core::Error),

    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Read {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        CliError::Write {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use fgd_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Read { .. } => EXIT_USAGE,
            CliError::Write { .. } => EXIT_INTERNAL,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::InfeasibleLevel { .. } | E::Parse { .. } | E::Json(_) | E::DegenerateFit(_) => {
                    EXIT_USAGE
                }
                E::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            },
        }
    }
}
