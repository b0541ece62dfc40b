use std::path::PathBuf;

use lasso_zero_core::Error as CoreError;

/// Process exit codes of the `lass0` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const COUNTEREXAMPLE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Input { .. } | AppError::Usage(_) => exit::USAGE,
            AppError::Output { .. } => exit::NUMERICAL,
            AppError::Core(e) => match e {
                CoreError::DimensionMismatch(_)
                | CoreError::NonFinite(_)
                | CoreError::ConstantColumn(_)
                | CoreError::InvalidConfig(_)
                | CoreError::EnumerationTooLarge(_)
                | CoreError::Precondition(_) => exit::USAGE,
                _ => exit::NUMERICAL,
            },
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
