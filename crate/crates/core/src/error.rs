use thiserror::Error;

use crate::ode::OdeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("labeling failure: {0}")]
    Label(String),
    #[error("missing label {0}")]
    MissingLabel(String),
    #[error("zero matrix element for transition {0}")]
    ZeroMatrixElement(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
