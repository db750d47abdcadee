use thiserror::Error;

/// Errors raised by model construction, estimation and selection.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("scale matrix is not symmetric positive definite")]
    NotSpd,

    #[error("degrees of freedom must exceed 2, got {0}")]
    DegreesOfFreedom(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series has {len} observations, the model needs more than {need}")]
    TooShort { len: usize, need: usize },

    #[error("parameters are outside the stationary region")]
    NonStationary,

    #[error("prior rejection sampler exhausted its budget of {0} attempts")]
    RejectionBudget(u64),

    #[error("all incremental weights vanished at stage {stage}")]
    Degenerate { stage: usize },

    #[error("all {0} candidate models failed")]
    AllCandidatesFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
