use thiserror::Error;

/// Failure of a command, with the process exit code it maps to.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Resource(_) => 3,
            Self::CrossCheck(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<bdh_core::Error> for LabError {
    fn from(e: bdh_core::Error) -> Self {
        match e {
            bdh_core::Error::Parameter(m) => Self::Config(m),
            bdh_core::Error::Resource(m) => Self::Resource(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
