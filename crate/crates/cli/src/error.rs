//! Harness errors with their process exit codes.

use thiserror::Error;

/// Exit code 1: the inputs were readable but invalid (bad geometry,
/// unreachable targets, failed checks). Exit code 2: I/O or parse trouble.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl HarnessError {
    pub fn validation(msg: impl Into<String>) -> Self {
        HarnessError::Validation(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        HarnessError::Io(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Io(_) => 2,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<wristkin::KinError> for HarnessError {
    fn from(e: wristkin::KinError) -> Self {
        HarnessError::Validation(e.to_string())
    }
}
