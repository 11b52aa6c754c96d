use adfm_core::Error as CoreError;
use std::path::PathBuf;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;
pub const EXIT_NO_RDFM: i32 = 4;
pub const EXIT_NO_REMOVAL_SET: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    NoRemovalSet(String),

    #[error("RDFM verification failed: {0}")]
    Unconfirmed(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::NoRemovalSet(_) => EXIT_NO_REMOVAL_SET,
            CliError::Unconfirmed(_) | CliError::Write { .. } => EXIT_COMPUTE,
            CliError::Core(e) => match e {
                CoreError::Io { .. }
                | CoreError::Parse(_)
                | CoreError::Dimension { .. }
                | CoreError::NonFinite { .. }
                | CoreError::Partition(_)
                | CoreError::Pattern(_)
                | CoreError::InvalidArgument(_)
                | CoreError::NotAnEigenvalue(_)
                | CoreError::BudgetExceeded { .. } => EXIT_USAGE,
                CoreError::NoCandidate { .. } | CoreError::NotACandidate(_) | CoreError::ComplexMode(_) => {
                    EXIT_NO_RDFM
                }
                _ => EXIT_COMPUTE,
            },
        }
    }
}
