use rand::Rng;
use rayon::prelude::*;

use super::{ParticleCloud, Target};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;

const VARIANCE_FLOOR: f64 = 1e-12;

/// `ρ_m = ((m - 1) / (M - 1))^λ` for `m = 1..=M`.
pub fn tempering_schedule(m: usize, stages: usize, lambda: f64) -> f64 {
    assert!(
        stages >= 2 && (1..=stages).contains(&m),
        "stage {m} outside 1..={stages}"
    );
    if m == stages {
        return 1.0;
    }
    ((m - 1) as f64 / (stages - 1) as f64).powf(lambda)
}

/// Reweights the cloud from its current exponent to `rho` and advances the
/// stage counter. Returns the log of the mean incremental weight
/// `log((1/P) Σ_i w̃_i W_i)`; the new weights have mean one.
pub fn correction<T: Real>(cloud: &mut ParticleCloud<T>, rho: T) -> Result<T> {
    let stage = cloud.stage() + 1;
    let delta = rho - cloud.rho();
    let p = T::lit(cloud.len() as f64);
    if delta == T::zero() {
        cloud.set_stage(stage, rho);
        return Ok(T::zero());
    }
    let log_w: Vec<T> = cloud
        .weights()
        .iter()
        .zip(cloud.logliks())
        .map(|(&w, &ll)| {
            let v = delta * ll + w.ln();
            if v.is_nan() {
                T::neg_infinity()
            } else {
                v
            }
        })
        .collect();
    let max = log_w.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::Degenerate { stage });
    }
    let scaled: Vec<T> = log_w.iter().map(|&v| (v - max).exp()).collect();
    let total: T = scaled.iter().copied().sum();
    let weights = cloud.weights_mut();
    for (w, s) in weights.iter_mut().zip(&scaled) {
        *w = *s * p / total;
    }
    cloud.set_stage(stage, rho);
    Ok(max + total.ln() - p.ln())
}

/// `ESS = P / ((1/P) Σ W_i²)` for weights with mean one; the same as
/// `(Σ W)² / Σ W²` in general.
pub fn ess<T: Real>(weights: &[T]) -> T {
    let sum: T = weights.iter().copied().sum();
    let sq: T = weights.iter().map(|&w| w * w).sum();
    sum * sum / sq
}

/// Multinomial resampling when `ESS < ess_fraction · P`. Returns whether
/// the cloud was resampled; afterwards all weights are one.
pub fn selection<T: Real, R: Rng + ?Sized>(cloud: &mut ParticleCloud<T>, ess_fraction: f64, rng: &mut R) -> bool {
    let p = cloud.len();
    if !(cloud.ess() < T::lit(ess_fraction * p as f64)) {
        return false;
    }
    let mut cum = Vec::with_capacity(p);
    let mut acc = T::zero();
    for &w in cloud.weights() {
        acc += w;
        cum.push(acc);
    }
    let idx: Vec<usize> = (0..p)
        .map(|_| {
            let u = T::open01(rng) * acc;
            cum.partition_point(|&c| c < u).min(p - 1)
        })
        .collect();
    cloud.reorder(&idx);
    true
}

/// Random-walk proposal shape: a Cholesky factor of the weighted particle
/// covariance.
#[derive(Clone, Debug)]
pub struct Proposal<T> {
    chol: Cholesky<T>,
    diagonal_fallback: bool,
}

impl<T: Real> Proposal<T> {
    /// Uses the weighted covariance, or its diagonal (floored at `1e-12`)
    /// when the covariance is singular.
    pub fn from_cloud(cloud: &ParticleCloud<T>) -> Self {
        let k = cloud.dim();
        let mean = cloud.weighted_mean();
        let total: T = cloud.weights().iter().copied().sum();
        let mut cov = Mat::zeros(k, k);
        let mut dev = vec![T::zero(); k];
        for (w, th) in cloud.weights().iter().zip(cloud.params().chunks_exact(k)) {
            if *w == T::zero() {
                continue;
            }
            for ((d, &x), &m) in dev.iter_mut().zip(th).zip(&mean) {
                *d = x - m;
            }
            for i in 0..k {
                let wi = *w * dev[i];
                for j in 0..=i {
                    cov[(i, j)] += wi * dev[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..=i {
                let v = cov[(i, j)] / total;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Self::from_covariance(&cov)
    }

    pub fn from_covariance(cov: &Mat<T>) -> Self {
        if let Some(chol) = Cholesky::new(cov) {
            return Proposal {
                chol,
                diagonal_fallback: false,
            };
        }
        let k = cov.rows();
        let floor = T::lit(VARIANCE_FLOOR);
        let mut diag = Mat::zeros(k, k);
        for i in 0..k {
            let v = cov[(i, i)];
            diag[(i, i)] = if v.is_finite() && v > floor { v } else { floor };
        }
        Proposal {
            chol: Cholesky::new(&diag).expect("positive diagonal"),
            diagonal_fallback: true,
        }
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    /// True when the covariance was singular and the diagonal was used.
    pub fn is_diagonal_fallback(&self) -> bool {
        self.diagonal_fallback
    }
}

#[inline]
fn tempered<T: Real>(lp: T, ll: T, rho: T) -> T {
    if lp == T::neg_infinity() {
        return lp;
    }
    let v = lp + rho * ll;
    if v.is_nan() {
        T::neg_infinity()
    } else {
        v
    }
}

/// `steps` random-walk Metropolis–Hastings moves per particle targeting
/// the cloud's current bridge density. Returns the acceptance rate.
pub fn mutation<T: Real, K: Target<T>>(
    cloud: &mut ParticleCloud<T>,
    target: &K,
    proposal: &Proposal<T>,
    scale: T,
    steps: usize,
    seed: u64,
) -> f64 {
    let k = cloud.dim();
    let p = cloud.len();
    let rho = cloud.rho();
    let stage = cloud.stage() as u64;
    let chol = proposal.cholesky();
    let (params, logliks, logpriors) = cloud.parts_mut();
    let accepted: Vec<usize> = params
        .par_chunks_mut(k)
        .zip(logliks.par_iter_mut())
        .zip(logpriors.par_iter_mut())
        .enumerate()
        .map(|(i, ((theta, ll), lp))| {
            let mut count = 0;
            let mut z = vec![T::zero(); k];
            let mut cand = vec![T::zero(); k];
            for step in 0..steps {
                let mut rng = stream(seed, Purpose::Mutation, stage, step as u64, i as u64);
                z.iter_mut().for_each(|v| *v = T::standard_normal(&mut rng));
                let log_u = T::open01(&mut rng).ln();
                let shift = chol.mul_lower(&z);
                for ((c, &t), &d) in cand.iter_mut().zip(theta.iter()).zip(&shift) {
                    *c = t + scale * d;
                }
                let lp_new = target.log_prior(&cand);
                if lp_new == T::neg_infinity() {
                    continue;
                }
                let ll_new = target.log_likelihood(&cand);
                let delta = tempered(lp_new, ll_new, rho) - tempered(*lp, *ll, rho);
                if log_u < delta {
                    theta.copy_from_slice(&cand);
                    *ll = ll_new;
                    *lp = lp_new;
                    count += 1;
                }
            }
            count
        })
        .collect();
    let total: usize = accepted.iter().sum();
    total as f64 / (p * steps) as f64
}

/// Proposal-scale update steering the acceptance rate towards `target`.
pub fn next_scale(scale: f64, acceptance: f64, target: f64) -> f64 {
    let x = 16.0 * (acceptance - target);
    let logistic = 1.0 / (1.0 + (-x).exp());
    scale * (0.95 + 0.10 * logistic)
}
