use thiserror::Error;

/// Failure modes of the reduction pipeline.
///
/// `Config` and `InvalidArgument` map to process exit code 2, everything
/// else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("transform overflow: {0}")]
    Overflow(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 1 for numerical or io failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            _ => 1,
        }
    }
}
