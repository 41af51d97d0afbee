use std::process::ExitCode;
use thiserror::Error;

/// Why a command failed; decides the exit status.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

/// Parameter problems are the caller's fault; everything else happened while running.
impl From<octopus::Error> for Failure {
    fn from(e: octopus::Error) -> Self {
        match e {
            octopus::Error::Parameter(_) | octopus::Error::Budget { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}
