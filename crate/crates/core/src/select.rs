//! Model identification over a grid of orders and error families.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::PosteriorKernel;
use crate::model::{ErrorDist, ModelSpec, SeriesData};
use crate::priors::PriorConfig;
use crate::rng::{derive_seed, Purpose};
use crate::scalar::Real;
use crate::smc::{self, SmcConfig, SmcRunResult};

/// Orders `(r, s)` crossed with error families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateGrid {
    pub orders: Vec<(usize, usize)>,
    pub dists: Vec<ErrorDist>,
}

impl Default for CandidateGrid {
    fn default() -> Self {
        CandidateGrid {
            orders: vec![(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2)],
            dists: ErrorDist::ALL.to_vec(),
        }
    }
}

impl CandidateGrid {
    pub fn single(spec: &ModelSpec) -> Self {
        CandidateGrid {
            orders: vec![(spec.r(), spec.s())],
            dists: vec![spec.dist()],
        }
    }

    /// Candidate specs for `n` series, orders outermost.
    pub fn candidates(&self, n: usize) -> Result<Vec<ModelSpec>> {
        if self.orders.is_empty() || self.dists.is_empty() {
            return Err(Error::InvalidConfig("candidate grid is empty".into()));
        }
        let mut out = Vec::with_capacity(self.orders.len() * self.dists.len());
        for &(r, s) in &self.orders {
            for &d in &self.dists {
                out.push(ModelSpec::new(n, r, s, d)?);
            }
        }
        Ok(out)
    }

    pub fn max_order(&self) -> usize {
        self.orders.iter().map(|(r, s)| r + s).max().unwrap_or(0)
    }
}

/// `-2 ℓ + k log(n_obs)`.
pub fn bic_value(log_likelihood: f64, k: usize, n_obs: usize) -> f64 {
    -2.0 * log_likelihood + k as f64 * (n_obs as f64).ln()
}

/// BIC at the MAP particle, penalised by the number of likelihood terms.
pub fn bic<T: Real>(kernel: &PosteriorKernel<T>, result: &SmcRunResult<T>) -> f64 {
    let ll = kernel.log_likelihood(&result.map).as_f64();
    bic_value(ll, kernel.spec().num_params(), kernel.num_terms())
}

/// One row of a selection report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub spec: ModelSpec,
    pub k: usize,
    pub seed: u64,
    pub log_mdd: Option<f64>,
    pub bic: Option<f64>,
    pub map_log_likelihood: Option<f64>,
    pub runtime_secs: f64,
    /// Why the run failed, if it did.
    pub error: Option<String>,
}

impl CandidateOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub candidates: Vec<CandidateOutcome>,
    /// Index of the largest log MDD.
    pub best_by_mdd: usize,
    /// Index of the smallest BIC.
    pub best_by_bic: usize,
}

impl SelectionReport {
    /// Builds the report and its argmax/argmin fields; failed candidates are
    /// kept but never ranked.
    pub fn from_outcomes(candidates: Vec<CandidateOutcome>) -> Result<Self> {
        let pick = |key: fn(&CandidateOutcome) -> Option<f64>, larger: bool| {
            let mut best: Option<(usize, f64)> = None;
            for (i, c) in candidates.iter().enumerate() {
                let Some(v) = key(c).filter(|v| !v.is_nan()) else {
                    continue;
                };
                let better = match best {
                    None => true,
                    Some((_, b)) => (larger && v > b) || (!larger && v < b),
                };
                if better {
                    best = Some((i, v));
                }
            }
            best.map(|(i, _)| i)
        };
        let (Some(best_by_mdd), Some(best_by_bic)) = (pick(|c| c.log_mdd, true), pick(|c| c.bic, false)) else {
            return Err(Error::AllCandidatesFailed(candidates.len()));
        };
        Ok(SelectionReport {
            candidates,
            best_by_mdd,
            best_by_bic,
        })
    }

    pub fn best_spec_by_mdd(&self) -> &ModelSpec {
        &self.candidates[self.best_by_mdd].spec
    }

    pub fn best_spec_by_bic(&self) -> &ModelSpec {
        &self.candidates[self.best_by_bic].spec
    }

    pub fn num_failed(&self) -> usize {
        self.candidates.iter().filter(|c| !c.succeeded()).count()
    }

    /// Candidate indices from best to worst MDD; failures last.
    pub fn rank_by_mdd(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.candidates.len()).collect();
        let key = |i: &usize| self.candidates[*i].log_mdd.unwrap_or(f64::NEG_INFINITY);
        idx.sort_by(|a, b| key(b).total_cmp(&key(a)));
        idx
    }
}

/// Estimates one candidate; the result carries the kernel for follow-up
/// quantities such as the BIC.
pub fn estimate<T: Real>(
    spec: ModelSpec,
    data: &SeriesData<T>,
    smc_cfg: &SmcConfig,
    prior: &PriorConfig<T>,
) -> Result<(PosteriorKernel<T>, SmcRunResult<T>)> {
    let kernel = PosteriorKernel::new(spec, data.clone(), prior.clone())?;
    let result = smc::run(&kernel, smc_cfg)?;
    Ok((kernel, result))
}

/// Runs the sampler for every candidate. Candidate `i` uses the seed
/// derived from `smc_cfg.seed` and `i`.
pub fn select_model<T: Real>(
    data: &SeriesData<T>,
    grid: &CandidateGrid,
    smc_cfg: &SmcConfig,
    prior: &PriorConfig<T>,
) -> Result<SelectionReport> {
    smc_cfg.validate()?;
    let specs = grid.candidates(data.dim())?;
    if data.len() <= grid.max_order() + 1 {
        return Err(Error::TooShort {
            len: data.len(),
            need: grid.max_order() + 1,
        });
    }
    let mut outcomes = Vec::with_capacity(specs.len());
    for (i, spec) in specs.into_iter().enumerate() {
        let seed = derive_seed(smc_cfg.seed, Purpose::Candidate, i as u64);
        let cfg = SmcConfig {
            seed,
            ..smc_cfg.clone()
        };
        let start = Instant::now();
        let outcome = match estimate(spec, data, &cfg, prior) {
            Ok((kernel, res)) => {
                let ll = kernel.log_likelihood(&res.map).as_f64();
                CandidateOutcome {
                    spec,
                    k: spec.num_params(),
                    seed,
                    log_mdd: Some(res.log_mdd.as_f64()),
                    bic: Some(bic_value(ll, spec.num_params(), kernel.num_terms())),
                    map_log_likelihood: Some(ll),
                    runtime_secs: start.elapsed().as_secs_f64(),
                    error: None,
                }
            }
            Err(e) => CandidateOutcome {
                spec,
                k: spec.num_params(),
                seed,
                log_mdd: None,
                bic: None,
                map_log_likelihood: None,
                runtime_secs: start.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
            },
        };
        outcomes.push(outcome);
    }
    SelectionReport::from_outcomes(outcomes)
}
