//! Run configuration: a TOML file, overridden field by field from the
//! command line, then validated before anything runs.

use std::path::{Path, PathBuf};

use marsmc_core::{CandidateGrid, ErrorDist, Mat, ModelSpec, Params, Priors, SmcConfig};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input CSV for `estimate`, `select` and `detrend`.
    pub input: Option<PathBuf>,
    /// Directory receiving every output file.
    pub output: PathBuf,
    /// Write the final particle cloud as `cloud.bin`.
    pub dump_cloud: bool,
    pub model: ModelConfig,
    pub smc: SmcConfig,
    pub prior: Priors,
    pub grid: CandidateGrid,
    pub simulate: SimulateConfig,
    pub mc: McConfig,
    pub detrend: DetrendConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output: PathBuf::from("out"),
            dump_cloud: false,
            model: ModelConfig::default(),
            smc: SmcConfig::default(),
            prior: Priors::default(),
            grid: CandidateGrid::default(),
            simulate: SimulateConfig::default(),
            mc: McConfig::default(),
            detrend: DetrendConfig::default(),
        }
    }
}

/// Orders and error family for a single-model estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub r: usize,
    pub s: usize,
    pub dist: ErrorDist,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            r: 1,
            s: 1,
            dist: ErrorDist::StudentT,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, n: usize) -> Result<ModelSpec> {
        Ok(ModelSpec::new(n, self.r, self.s, self.dist)?)
    }
}

/// Data-generating process. Without explicit matrices the bivariate
/// VMAR(1,1) Monte Carlo design is used with the chosen family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub dist: ErrorDist,
    pub len: usize,
    /// Burn-in at each end; the family default when absent.
    pub burn: Option<usize>,
    pub seed: u64,
    /// Causal matrices, each given by rows.
    pub psi: Option<Vec<Vec<Vec<f64>>>>,
    /// Noncausal matrices, each given by rows.
    pub phi: Option<Vec<Vec<Vec<f64>>>>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub nu: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    /// Per-series polynomial trend coefficients in normalised time
    /// `t ∈ [0, 1]`, constant term first, added to the simulated path.
    pub trend: Option<Vec<Vec<f64>>>,
    /// First month (`YYYY-MM`) of a monthly date column.
    pub start_month: Option<String>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            dist: ErrorDist::Cauchy,
            len: 150,
            burn: None,
            seed: 1,
            psi: None,
            phi: None,
            sigma: None,
            nu: None,
            alpha: None,
            trend: None,
            start_month: None,
        }
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Mat<f64>> {
    Mat::from_f64_rows(rows).map_err(|e| PipelineError::Config(format!("simulate.{what}: {e}")))
}

impl SimulateConfig {
    /// True parameters of the configured process.
    pub fn params(&self) -> Result<Params> {
        let custom = self.psi.is_some() || self.phi.is_some() || self.sigma.is_some();
        if !custom {
            return Ok(marsmc_core::simulate::table2_params(self.dist));
        }
        let sigma = self
            .sigma
            .as_ref()
            .ok_or_else(|| PipelineError::Config("simulate.sigma is required with explicit coefficients".into()))?;
        let sigma = matrix(sigma, "sigma")?;
        let psi = self
            .psi
            .iter()
            .flatten()
            .map(|m| matrix(m, "psi"))
            .collect::<Result<Vec<_>>>()?;
        let phi = self
            .phi
            .iter()
            .flatten()
            .map(|m| matrix(m, "phi"))
            .collect::<Result<Vec<_>>>()?;
        let spec = ModelSpec::new(sigma.rows(), psi.len(), phi.len(), self.dist)?;
        Ok(Params::encode(
            spec,
            &psi,
            &phi,
            &sigma,
            self.nu,
            self.alpha.as_deref(),
        )?)
    }

    pub fn dgp(&self) -> Result<marsmc_core::Dgp> {
        let burn = self.burn.unwrap_or_else(|| marsmc_core::Dgp::default_burn(self.dist));
        Ok(marsmc_core::Dgp::new(self.params()?, self.len, burn, self.seed)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    /// Bias and RMSE of the posterior mean under the true specification.
    Estimation,
    /// How often each criterion picks each candidate.
    Identification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub replications: usize,
    pub mode: StudyMode,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 20,
            mode: StudyMode::Estimation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetrendConfig {
    pub degree: usize,
}

impl Default for DetrendConfig {
    fn default() -> Self {
        DetrendConfig { degree: 3 }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.smc.validate()?;
        self.grid.candidates(1)?;
        if self.grid.orders.iter().any(|&(r, s)| r + s == 0) {
            return Err(PipelineError::Config("grid.orders: every pair needs r + s >= 1".into()));
        }
        if self.model.r + self.model.s == 0 {
            return Err(PipelineError::Config("model: r + s must be at least 1".into()));
        }
        if self.mc.replications == 0 {
            return Err(PipelineError::Config("mc.replications must be at least 1".into()));
        }
        if let Some(m) = &self.simulate.start_month {
            parse_month(m)?;
        }
        Ok(())
    }

    /// Serialises the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

/// Sets a dotted path such as `smc.particles=2000`. The value is read as a
/// TOML literal and falls back to a plain string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PipelineError::Config(format!("override key `{key}` is malformed")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| PipelineError::Config(format!("override key `{key}`: `{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// `YYYY-MM` to `(year, month)`.
pub fn parse_month(s: &str) -> Result<(i32, u32)> {
    let bad = || PipelineError::Config(format!("`{s}` is not a YYYY-MM month"));
    let (y, m) = s.split_once('-').ok_or_else(bad)?;
    let y: i32 = y.parse().map_err(|_| bad())?;
    let m: u32 = m.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&m) {
        return Err(bad());
    }
    Ok((y, m))
}

/// `count` consecutive months starting at `start`.
pub fn monthly_dates(start: &str, count: usize) -> Result<Vec<String>> {
    let (y, m) = parse_month(start)?;
    let first = y * 12 + m as i32 - 1;
    Ok((0..count as i32)
        .map(|k| {
            let idx = first + k;
            format!("{:04}-{:02}", idx.div_euclid(12), idx.rem_euclid(12) + 1)
        })
        .collect())
}
