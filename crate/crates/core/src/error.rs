//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the library. Each variant maps to a CLI exit code.
#[derive(Debug, Error)]
pub enum OvError {
    /// Malformed input or configuration.
    #[error("validation error: {0}")]
    Validation(String),
    /// Input outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The asymptotic regime gate `t >= T_min` was not met.
    #[error("domain gate: {0}")]
    Gate(String),
    /// Loss of accuracy, singular systems, integrator failure.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl OvError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            OvError::Validation(_) | OvError::Io(_) => 2,
            OvError::Domain(_) | OvError::Gate(_) => 3,
            OvError::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, OvError>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(OvError::Validation(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(OvError::Domain(msg.into()))
}

pub(crate) fn numerical<T>(msg: impl Into<String>) -> Result<T> {
    Err(OvError::Numerical(msg.into()))
}
