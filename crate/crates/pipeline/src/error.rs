use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] marsmc_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{0}: no observations")]
    NoObservations(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Format(String),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Core(e) => match e {
                marsmc_core::Error::InvalidConfig(_) => "config",
                marsmc_core::Error::Degenerate { .. } | marsmc_core::Error::AllCandidatesFailed(_) => "estimation",
                _ => "model",
            },
            PipelineError::Io { .. } => "io",
            PipelineError::Parse { .. } | PipelineError::NoObservations(_) => "input",
            PipelineError::Config(_) => "config",
            PipelineError::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
