//! Likelihood-tempered sequential Monte Carlo.
//!
//! The sampler moves a weighted particle cloud from the prior (`ρ = 0`) to
//! the posterior (`ρ = 1`) through the bridge densities
//! `π_m(θ) ∝ p(y | θ)^{ρ_m} p(θ)`. Each stage reweights (correction),
//! resamples when the effective sample size drops (selection), and moves the
//! particles with random-walk Metropolis–Hastings (mutation). The product of
//! the per-stage mean incremental weights estimates the marginal data
//! density.
//!
//! Randomness comes from counter-based streams keyed by stage, step and
//! particle index, and every reduction runs sequentially, so a run is
//! bit-identical for any number of worker threads.

mod steps;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};
use crate::scalar::Real;

pub use steps::{correction, ess, mutation, next_scale, selection, tempering_schedule, Proposal};

/// A posterior split into prior and likelihood, as the sampler sees it.
pub trait Target<T: Real>: Sync {
    /// Length of the parameter vector.
    fn dim(&self) -> usize;

    /// Log prior density, `-∞` outside the support.
    fn log_prior(&self, theta: &[T]) -> T;

    fn log_likelihood(&self, theta: &[T]) -> T;

    /// One draw from the prior.
    fn sample_prior(&self, rng: &mut StreamRng) -> Result<Vec<T>>;

    /// Number of likelihood terms, if meaningful.
    fn num_observations(&self) -> Option<usize> {
        None
    }
}

/// Sampler settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmcConfig {
    /// Number of particles `P`.
    pub particles: usize,
    /// Number of stages `M`, including the prior stage.
    pub stages: usize,
    /// Tempering exponent `λ`.
    pub lambda: f64,
    /// Metropolis–Hastings steps per stage.
    pub mutation_steps: usize,
    /// Resample when `ESS < ess_fraction · P`.
    pub ess_fraction: f64,
    /// Acceptance rate the proposal scale is steered towards.
    pub target_accept: f64,
    /// Proposal scale at the first mutation stage.
    pub initial_scale: f64,
    pub seed: u64,
}

impl Default for SmcConfig {
    fn default() -> Self {
        SmcConfig {
            particles: 10_000,
            stages: 100,
            lambda: 2.0,
            mutation_steps: 1,
            ess_fraction: 0.5,
            target_accept: 0.25,
            initial_scale: 0.3,
            seed: 1,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.particles < 2 {
            return bad("smc.particles must be at least 2");
        }
        if self.stages < 2 {
            return bad("smc.stages must be at least 2");
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad("smc.lambda must be positive");
        }
        if self.mutation_steps < 1 {
            return bad("smc.mutation_steps must be at least 1");
        }
        if !(self.ess_fraction > 0.0 && self.ess_fraction <= 1.0) {
            return bad("smc.ess_fraction must lie in (0, 1]");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("smc.target_accept must lie in (0, 1)");
        }
        if !(self.initial_scale >= 0.0) || !self.initial_scale.is_finite() {
            return bad("smc.initial_scale must be non-negative");
        }
        Ok(())
    }
}

/// Weighted particles at one stage. Parameters are stored row-major,
/// one particle per row; weights have mean one.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud<T> {
    dim: usize,
    params: Vec<T>,
    weights: Vec<T>,
    logliks: Vec<T>,
    logpriors: Vec<T>,
    stage: usize,
    rho: T,
}

impl<T: Real> ParticleCloud<T> {
    /// Assembles a cloud; all per-particle vectors must agree in length.
    pub fn from_parts(
        dim: usize,
        params: Vec<T>,
        weights: Vec<T>,
        logliks: Vec<T>,
        logpriors: Vec<T>,
        stage: usize,
        rho: T,
    ) -> Result<Self> {
        let p = weights.len();
        if dim == 0 || params.len() != p * dim || logliks.len() != p || logpriors.len() != p || p == 0 {
            return Err(Error::Dimension(format!(
                "inconsistent cloud: dim {dim}, {} params, {p} weights, {} logliks, {} logpriors",
                params.len(),
                logliks.len(),
                logpriors.len()
            )));
        }
        Ok(ParticleCloud {
            dim,
            params,
            weights,
            logliks,
            logpriors,
            stage,
            rho,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particle(&self, i: usize) -> &[T] {
        &self.params[i * self.dim..(i + 1) * self.dim]
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn logliks(&self) -> &[T] {
        &self.logliks
    }

    pub fn logpriors(&self) -> &[T] {
        &self.logpriors
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn mean_weight(&self) -> T {
        self.weights.iter().copied().sum::<T>() / T::lit(self.len() as f64)
    }

    pub fn ess(&self) -> T {
        ess(&self.weights)
    }

    /// Weighted mean of each coordinate.
    pub fn weighted_mean(&self) -> Vec<T> {
        let mut mean = vec![T::zero(); self.dim];
        let total: T = self.weights.iter().copied().sum();
        for (w, th) in self.weights.iter().zip(self.params.chunks_exact(self.dim)) {
            for (m, &x) in mean.iter_mut().zip(th) {
                *m += *w * x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        mean
    }

    /// Weighted standard deviation of each coordinate.
    pub fn weighted_sd(&self) -> Vec<T> {
        let mean = self.weighted_mean();
        let mut var = vec![T::zero(); self.dim];
        let total: T = self.weights.iter().copied().sum();
        for (w, th) in self.weights.iter().zip(self.params.chunks_exact(self.dim)) {
            for ((v, &x), &m) in var.iter_mut().zip(th).zip(&mean) {
                *v += *w * (x - m) * (x - m);
            }
        }
        var.iter().map(|&v| (v / total).sqrt()).collect()
    }

    /// Index of the particle maximising `log prior + log likelihood`.
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        let mut best_val = T::neg_infinity();
        for i in 0..self.len() {
            let v = self.logpriors[i] + self.logliks[i];
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [T], &mut [T], &mut [T]) {
        (&mut self.params, &mut self.logliks, &mut self.logpriors)
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Vec<T> {
        &mut self.weights
    }

    pub(crate) fn set_stage(&mut self, stage: usize, rho: T) {
        self.stage = stage;
        self.rho = rho;
    }

    pub(crate) fn reorder(&mut self, idx: &[usize]) {
        let d = self.dim;
        let mut params = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            params.extend_from_slice(&self.params[i * d..(i + 1) * d]);
        }
        self.params = params;
        self.logliks = idx.iter().map(|&i| self.logliks[i]).collect();
        self.logpriors = idx.iter().map(|&i| self.logpriors[i]).collect();
        self.weights = vec![T::one(); idx.len()];
    }
}

/// What happened at one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    pub rho: f64,
    /// Effective sample size after correction, before selection.
    pub ess: f64,
    pub resampled: bool,
    /// Mutation acceptance rate; absent at the prior stage.
    pub acceptance: Option<f64>,
    /// Proposal scale used for this stage's mutation.
    pub scale: f64,
    /// Log of the mean incremental weight.
    pub log_increment: f64,
}

/// Output of a complete run.
#[derive(Clone, Debug, PartialEq)]
pub struct SmcRunResult<T> {
    pub cloud: ParticleCloud<T>,
    pub log_mdd: T,
    pub diagnostics: Vec<StageDiagnostics>,
    pub posterior_mean: Vec<T>,
    pub posterior_sd: Vec<T>,
    /// Highest-posterior particle of the final cloud.
    pub map: Vec<T>,
    pub map_log_likelihood: T,
    pub map_log_prior: T,
}

/// Draws the stage-1 cloud from the prior.
pub fn initialize<T: Real, K: Target<T>>(target: &K, cfg: &SmcConfig) -> Result<ParticleCloud<T>> {
    let dim = target.dim();
    let draws: Vec<Result<(Vec<T>, T, T)>> = (0..cfg.particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, Purpose::PriorInit, 0, 0, i as u64);
            let theta = target.sample_prior(&mut rng)?;
            if theta.len() != dim {
                return Err(Error::Dimension(format!(
                    "prior draw has length {}, target expects {dim}",
                    theta.len()
                )));
            }
            let lp = target.log_prior(&theta);
            let ll = target.log_likelihood(&theta);
            Ok((theta, ll, lp))
        })
        .collect();
    let mut params = Vec::with_capacity(cfg.particles * dim);
    let mut logliks = Vec::with_capacity(cfg.particles);
    let mut logpriors = Vec::with_capacity(cfg.particles);
    for d in draws {
        let (theta, ll, lp) = d?;
        params.extend(theta);
        logliks.push(ll);
        logpriors.push(lp);
    }
    ParticleCloud::from_parts(
        dim,
        params,
        vec![T::one(); cfg.particles],
        logliks,
        logpriors,
        1,
        T::zero(),
    )
}

/// Runs the sampler to `ρ = 1`.
pub fn run<T: Real, K: Target<T>>(target: &K, cfg: &SmcConfig) -> Result<SmcRunResult<T>> {
    run_observed(target, cfg, |_, _| {})
}

/// As [`run`], calling `observe` after every stage (including the prior
/// stage) with that stage's diagnostics and the resulting cloud.
pub fn run_observed<T, K, F>(target: &K, cfg: &SmcConfig, mut observe: F) -> Result<SmcRunResult<T>>
where
    T: Real,
    K: Target<T>,
    F: FnMut(&StageDiagnostics, &ParticleCloud<T>),
{
    cfg.validate()?;
    let mut cloud = initialize(target, cfg)?;
    let p = cfg.particles;
    let mut scale = cfg.initial_scale;
    let mut diagnostics = Vec::with_capacity(cfg.stages);
    let first = StageDiagnostics {
        stage: 1,
        rho: 0.0,
        ess: p as f64,
        resampled: false,
        acceptance: None,
        scale,
        log_increment: 0.0,
    };
    observe(&first, &cloud);
    diagnostics.push(first);

    let mut log_mdd = T::zero();
    for m in 2..=cfg.stages {
        let rho = T::lit(tempering_schedule(m, cfg.stages, cfg.lambda));
        let log_inc = correction(&mut cloud, rho)?;
        log_mdd += log_inc;

        let proposal = Proposal::from_cloud(&cloud);
        let ess_now = cloud.ess();
        let mut rng = stream(cfg.seed, Purpose::Resample, m as u64, 0, 0);
        let resampled = selection(&mut cloud, cfg.ess_fraction, &mut rng);

        let acc = mutation(
            &mut cloud,
            target,
            &proposal,
            T::lit(scale),
            cfg.mutation_steps,
            cfg.seed,
        );
        let diag = StageDiagnostics {
            stage: m,
            rho: rho.as_f64(),
            ess: ess_now.as_f64(),
            resampled,
            acceptance: Some(acc),
            scale,
            log_increment: log_inc.as_f64(),
        };
        observe(&diag, &cloud);
        diagnostics.push(diag);
        scale = next_scale(scale, acc, cfg.target_accept);
    }

    let map_idx = cloud.map_index();
    Ok(SmcRunResult {
        log_mdd,
        diagnostics,
        posterior_mean: cloud.weighted_mean(),
        posterior_sd: cloud.weighted_sd(),
        map: cloud.particle(map_idx).to_vec(),
        map_log_likelihood: cloud.logliks()[map_idx],
        map_log_prior: cloud.logpriors()[map_idx],
        cloud,
    })
}
