//! Monte Carlo studies: repeated simulation and estimation from a known
//! process.

use marsmc_core::rng::{derive_seed, Purpose};
use marsmc_core::select::{estimate, select_model};
use marsmc_core::simulate::simulate;
use marsmc_core::{CandidateGrid, Dgp, Priors, SmcConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::StudyMode;
use crate::error::{PipelineError, Result};

/// Accuracy of one parameter's point estimate across replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    /// Average posterior mean.
    pub mean_estimate: f64,
    /// Spread of the posterior means, divided by `B`.
    pub variance: f64,
    /// Average posterior standard deviation.
    pub mean_posterior_sd: f64,
    pub bias: f64,
    pub rmse: f64,
}

/// Per-parameter BIAS and RMSE of `estimates` (one vector per replication)
/// around `truth`.
pub fn summarize(names: &[String], truth: &[f64], estimates: &[Vec<f64>], sds: &[Vec<f64>]) -> Vec<ParamSummary> {
    let b = estimates.len() as f64;
    (0..truth.len())
        .map(|j| {
            let mean = estimates.iter().map(|e| e[j]).sum::<f64>() / b;
            let variance = estimates.iter().map(|e| (e[j] - mean).powi(2)).sum::<f64>() / b;
            let bias = estimates.iter().map(|e| e[j] - truth[j]).sum::<f64>() / b;
            let mse = estimates.iter().map(|e| (e[j] - truth[j]).powi(2)).sum::<f64>() / b;
            ParamSummary {
                name: names[j].clone(),
                truth: truth[j],
                mean_estimate: mean,
                variance,
                mean_posterior_sd: sds.iter().map(|s| s[j]).sum::<f64>() / b,
                bias,
                rmse: mse.sqrt(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub data_seed: u64,
    pub smc_seed: u64,
    /// Posterior mean (estimation mode).
    pub estimate: Option<Vec<f64>>,
    pub posterior_sd: Option<Vec<f64>>,
    pub log_mdd: Option<f64>,
    /// Chosen candidate labels (identification mode).
    pub best_by_mdd: Option<String>,
    pub best_by_bic: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub mode: StudyMode,
    pub true_model: String,
    pub replications: usize,
    pub failures: usize,
    /// Estimation mode only.
    pub params: Vec<ParamSummary>,
    /// Identification mode: candidate labels with the number of times each
    /// was chosen by MDD and by BIC.
    pub frequencies: Vec<SelectionCount>,
    pub records: Vec<ReplicationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCount {
    pub candidate: String,
    pub by_mdd: usize,
    pub by_bic: usize,
}

impl StudyReport {
    /// Share of successful replications in which `label` was chosen by BIC.
    pub fn bic_hit_rate(&self, label: &str) -> f64 {
        let ok = self.replications - self.failures;
        let hits = self
            .frequencies
            .iter()
            .find(|c| c.candidate == label)
            .map_or(0, |c| c.by_bic);
        if ok == 0 {
            0.0
        } else {
            hits as f64 / ok as f64
        }
    }

    pub fn mdd_hit_rate(&self, label: &str) -> f64 {
        let ok = self.replications - self.failures;
        let hits = self
            .frequencies
            .iter()
            .find(|c| c.candidate == label)
            .map_or(0, |c| c.by_mdd);
        if ok == 0 {
            0.0
        } else {
            hits as f64 / ok as f64
        }
    }
}

/// Runs `replications` independent simulate-then-estimate rounds. Each
/// replication derives its data and sampler seeds from the master seeds and
/// its index, so the report does not depend on scheduling. Failed
/// replications are recorded and skipped.
pub fn mc_study(
    dgp: &Dgp,
    replications: usize,
    mode: StudyMode,
    grid: &CandidateGrid,
    smc_cfg: &SmcConfig,
    prior: &Priors,
) -> Result<StudyReport> {
    if replications == 0 {
        return Err(PipelineError::Config("a study needs at least one replication".into()));
    }
    smc_cfg.validate()?;
    let spec = *dgp.spec();
    let records: Vec<ReplicationRecord> = (0..replications)
        .into_par_iter()
        .map(|b| {
            let data_seed = derive_seed(dgp.seed(), Purpose::Replication, b as u64);
            let smc_seed = derive_seed(smc_cfg.seed, Purpose::Replication, b as u64);
            let cfg = SmcConfig {
                seed: smc_seed,
                ..smc_cfg.clone()
            };
            let mut rec = ReplicationRecord {
                replication: b,
                data_seed,
                smc_seed,
                estimate: None,
                posterior_sd: None,
                log_mdd: None,
                best_by_mdd: None,
                best_by_bic: None,
                error: None,
            };
            let outcome = simulate(&dgp.with_seed(data_seed)).and_then(|data| match mode {
                StudyMode::Estimation => estimate(spec, &data, &cfg, prior).map(|(_, res)| {
                    rec.estimate = Some(res.posterior_mean);
                    rec.posterior_sd = Some(res.posterior_sd);
                    rec.log_mdd = Some(res.log_mdd);
                }),
                StudyMode::Identification => select_model(&data, grid, &cfg, prior).map(|rep| {
                    rec.best_by_mdd = Some(rep.best_spec_by_mdd().label());
                    rec.best_by_bic = Some(rep.best_spec_by_bic().label());
                }),
            });
            if let Err(e) = outcome {
                rec.error = Some(e.to_string());
            }
            rec
        })
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures == replications {
        return Err(PipelineError::Format(format!("all {replications} replications failed")));
    }
    let mut report = StudyReport {
        mode,
        true_model: spec.label(),
        replications,
        failures,
        params: Vec::new(),
        frequencies: Vec::new(),
        records,
    };
    match mode {
        StudyMode::Estimation => {
            let ok: Vec<&ReplicationRecord> = report.records.iter().filter(|r| r.error.is_none()).collect();
            let est: Vec<Vec<f64>> = ok.iter().filter_map(|r| r.estimate.clone()).collect();
            let sds: Vec<Vec<f64>> = ok.iter().filter_map(|r| r.posterior_sd.clone()).collect();
            report.params = summarize(&spec.layout().param_names(), dgp.params().as_slice(), &est, &sds);
        }
        StudyMode::Identification => {
            let labels: Vec<String> = grid.candidates(spec.n())?.iter().map(|s| s.label()).collect();
            report.frequencies = labels
                .into_iter()
                .map(|candidate| {
                    let count = |pick: fn(&ReplicationRecord) -> &Option<String>| {
                        report
                            .records
                            .iter()
                            .filter(|r| pick(r).as_deref() == Some(candidate.as_str()))
                            .count()
                    };
                    SelectionCount {
                        by_mdd: count(|r| &r.best_by_mdd),
                        by_bic: count(|r| &r.best_by_bic),
                        candidate,
                    }
                })
                .collect();
        }
    }
    Ok(report)
}
