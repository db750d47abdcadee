//! Command-line pipeline around `marsmc-core`: configuration, CSV input and
//! output, detrending, Monte Carlo studies and run manifests.

pub mod cli;
pub mod config;
pub mod detrend;
pub mod error;
pub mod io;
pub mod manifest;
pub mod mc;

pub use config::{RunConfig, StudyMode};
pub use error::{PipelineError, Result};
pub use manifest::RunManifest;
pub use mc::{mc_study, StudyReport};
