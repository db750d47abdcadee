//! Per-run manifest: everything needed to reproduce a run, minus wall-clock
//! timings, which go to a separate sidecar so repeated runs compare equal.

use std::path::Path;

use marsmc_core::StageDiagnostics;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{PipelineError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub map: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: String,
    pub observations: usize,
    pub series: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub input: Option<InputSummary>,
    pub model: Option<String>,
    pub log_mdd: Option<f64>,
    pub bic: Option<f64>,
    pub map_log_likelihood: Option<f64>,
    pub posterior: Vec<PosteriorRow>,
    pub diagnostics: Vec<StageDiagnostics>,
    /// Command-specific results (selection table, study summary, …).
    pub results: serde_json::Value,
    pub outputs: Vec<String>,
    /// Modelling choices that a reader comparing with other
    /// implementations should know about.
    pub deviations: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.smc.seed,
            config: config.clone(),
            input: None,
            model: None,
            log_mdd: None,
            bic: None,
            map_log_likelihood: None,
            posterior: Vec::new(),
            diagnostics: Vec::new(),
            results: serde_json::Value::Null,
            outputs: Vec::new(),
            deviations: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Modelling choices relevant to a run on `n` series.
pub fn deviations(n: Option<usize>, estimates: bool, selects: bool) -> Vec<String> {
    let mut d = Vec::new();
    if estimates || selects {
        d.push(
            "log_mdd is the sum over stages of the log mean incremental weight, with weights renormalised to mean one"
                .to_string(),
        );
        d.push(
            "the stationarity truncation of the coefficient prior is not renormalised; the constant cancels within a model \
             but not across models with different orders"
                .to_string(),
        );
        d.push("point estimates are weighted posterior means; the MAP particle is also reported".to_string());
    }
    if selects || estimates {
        d.push("BIC is evaluated at the MAP particle with penalty k·ln(T − r − s)".to_string());
    }
    if n == Some(1) {
        d.push("univariate scale prior: log σ ~ N(0, 10) in place of the inverse-Wishart".to_string());
    }
    d
}
