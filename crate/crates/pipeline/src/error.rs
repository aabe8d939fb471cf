use std::path::PathBuf;

use bioclim_core::io::Role;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] bioclim_core::Error),
    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("manifest has no `{role}` layer, required by {needed_by}")]
    MissingRole { role: Role, needed_by: String },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_MISSING_INPUT: i32 = 3;

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        use bioclim_core::Error as E;
        match self {
            PipelineError::MissingRole { .. } => EXIT_MISSING_INPUT,
            PipelineError::Core(E::MissingFile(_)) => EXIT_MISSING_INPUT,
            PipelineError::Core(
                E::InvalidGrid(_)
                | E::GridMismatch(_)
                | E::DimensionMismatch { .. }
                | E::NotDivisible { .. }
                | E::MonthCount(_)
                | E::MaskMismatch(_)
                | E::ConstraintViolation { .. }
                | E::DayOutOfRange(_)
                | E::InvalidConfig(_)
                | E::NoGeoreference(_)
                | E::Unsupported { .. }
                | E::ChecksumMismatch { .. }
                | E::Manifest(_),
            ) => EXIT_VALIDATION,
            PipelineError::Config { .. } | PipelineError::InvalidArgument(_) => EXIT_VALIDATION,
            _ => EXIT_FAILURE,
        }
    }
}
