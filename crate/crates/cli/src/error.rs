use thiserror::Error;

pub const EXIT_CHECKS_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] bethe_core::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use bethe_core::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            // bad input that only the library could detect
            CliError::Core(E::InvalidParams(_) | E::InvalidConfiguration(_) | E::Domain(_)) => {
                EXIT_USAGE
            }
            CliError::Core(_) | CliError::Write { .. } => EXIT_NUMERIC,
        }
    }
}
