//! Prior densities and prior draws.
//!
//! * coefficient blocks: independent normals with variance `c/i` for lag
//!   (or lead) `i`, truncated to the stationary region;
//! * scale matrix: inverse-Wishart `(c·I, ν_Σ)` for `n ≥ 2`; for `n = 1` a
//!   proper log-normal `log σ ~ N(0, v)` stands in for the improper `1/σ`;
//! * `ν`: exponential with mean `ν₀`, truncated to `(2, ν_max]`;
//! * `α`: `N(0, κ I)`, or half-normal for the univariate two-piece form.
//!
//! The stationarity truncation is not renormalised.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Mat};
use crate::model::{is_stationary, ModelSpec, ParamVector};
use crate::scalar::Real;
use crate::special::ln_mvgamma;

/// Attempts allowed per polynomial before the rejection sampler gives up.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Prior hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default, deny_unknown_fields)]
pub struct PriorConfig<T> {
    /// Numerator of the lag-`i` variance `γ_i = causal_variance / i`.
    pub causal_variance: T,
    /// Numerator of the lead-`q` variance `δ_q = noncausal_variance / q`.
    pub noncausal_variance: T,
    /// Inverse-Wishart scale `Ψ₀ = wishart_scale · I`.
    pub wishart_scale: T,
    pub wishart_df: T,
    /// Mean of the exponential prior on `ν`.
    pub nu_mean: T,
    /// Upper cap on `ν`.
    pub nu_max: T,
    /// Variance `κ` of the skewness prior.
    pub skew_variance: T,
    /// Variance of `log σ` in the univariate scale prior.
    pub log_scale_variance: T,
}

impl<T: Real> Default for PriorConfig<T> {
    fn default() -> Self {
        PriorConfig {
            causal_variance: T::lit(2.0),
            noncausal_variance: T::lit(2.0),
            wishart_scale: T::lit(5.0),
            wishart_df: T::lit(3.0),
            nu_mean: T::lit(5.0),
            nu_max: T::lit(100.0),
            skew_variance: T::lit(3.0),
            log_scale_variance: T::lit(10.0),
        }
    }
}

impl<T: Real> PriorConfig<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        let positive = [
            ("causal_variance", self.causal_variance),
            ("noncausal_variance", self.noncausal_variance),
            ("wishart_scale", self.wishart_scale),
            ("wishart_df", self.wishart_df),
            ("nu_mean", self.nu_mean),
            ("skew_variance", self.skew_variance),
            ("log_scale_variance", self.log_scale_variance),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("prior.{name} must be positive")));
            }
        }
        if !(self.wishart_df > T::lit(n as f64 - 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "prior.wishart_df must exceed n - 1 = {}",
                n - 1
            )));
        }
        if !(self.nu_max > T::lit(2.0)) {
            return Err(Error::InvalidConfig("prior.nu_max must exceed 2".into()));
        }
        Ok(())
    }

    /// Variance of the lag-`lag` causal block.
    pub fn causal_var(&self, lag: usize) -> T {
        self.causal_variance / T::lit(lag as f64)
    }

    pub fn noncausal_var(&self, lead: usize) -> T {
        self.noncausal_variance / T::lit(lead as f64)
    }

    /// Mass of the untruncated exponential on `(2, ν_max]` relative to `(2, ∞)`.
    fn nu_window(&self) -> T {
        -(-(self.nu_max - T::lit(2.0)) / self.nu_mean).exp_m1()
    }

    /// Mean of the truncated `ν` prior.
    pub fn nu_prior_mean(&self) -> T {
        let w = self.nu_max - T::lit(2.0);
        let tail = (-w / self.nu_mean).exp();
        T::lit(2.0) + self.nu_mean - w * tail / self.nu_window()
    }
}

#[inline]
fn ln_normal<T: Real>(x: T, var: T) -> T {
    -T::lit(0.5) * ((T::lit(2.0) * T::PI() * var).ln() + x * x / var)
}

/// Log prior density; `-∞` outside the support.
pub fn log_prior<T: Real>(spec: &ModelSpec, theta: &[T], cfg: &PriorConfig<T>) -> T {
    let lay = spec.layout();
    let n = lay.n;
    let nn = n * n;
    if theta.len() != lay.len || theta.iter().any(|x| !x.is_finite()) {
        return T::neg_infinity();
    }
    if !is_stationary(spec, theta) {
        return T::neg_infinity();
    }
    let mut lp = T::zero();
    for lag in 1..=lay.r {
        let v = cfg.causal_var(lag);
        lp += theta[lay.psi_block(lag)].iter().map(|&x| ln_normal(x, v)).sum::<T>();
    }
    for lead in 1..=lay.s {
        let v = cfg.noncausal_var(lead);
        lp += theta[lay.phi_block(lead)].iter().map(|&x| ln_normal(x, v)).sum::<T>();
    }
    debug_assert_eq!(lay.phi + lay.s * nn, lay.scale);

    let Some(chol) = Cholesky::from_vech(n, &theta[lay.scale_block()]) else {
        return T::neg_infinity();
    };
    lp += if n == 1 {
        let var = theta[lay.scale];
        // log σ = ½ log σ², Jacobian 1/(2σ²)
        ln_normal(T::lit(0.5) * var.ln(), cfg.log_scale_variance) - (T::lit(2.0) * var).ln()
    } else {
        log_inv_wishart(&chol, cfg.wishart_scale, cfg.wishart_df)
    };

    if let Some(i) = lay.nu {
        let nu = theta[i];
        if !(nu > T::lit(2.0)) || nu > cfg.nu_max {
            return T::neg_infinity();
        }
        lp += -cfg.nu_mean.ln() - (nu - T::lit(2.0)) / cfg.nu_mean - cfg.nu_window().ln();
    }
    if let Some(i) = lay.alpha {
        let alpha = &theta[i..i + n];
        if n == 1 {
            if !(alpha[0] > T::zero()) {
                return T::neg_infinity();
            }
            lp += T::LN_2() + ln_normal(alpha[0], cfg.skew_variance);
        } else {
            lp += alpha.iter().map(|&a| ln_normal(a, cfg.skew_variance)).sum::<T>();
        }
    }
    lp
}

/// Inverse-Wishart log density at `Σ = L L'` with scale `c·I` and `df`.
fn log_inv_wishart<T: Real>(chol: &Cholesky<T>, c: T, df: T) -> T {
    let n = chol.dim();
    let nf = T::lit(n as f64);
    let half = T::lit(0.5);
    let inv = chol.inverse();
    let trace: T = (0..n).map(|i| inv[(i, i)]).sum();
    half * df * nf * c.ln()
        - half * df * nf * T::LN_2()
        - ln_mvgamma(n, half * df)
        - half * (df + nf + T::one()) * chol.log_det()
        - half * c * trace
}

/// One prior draw plus the rejection counts spent on each polynomial.
#[derive(Clone, Debug)]
pub struct PriorDraw<T> {
    pub theta: Vec<T>,
    pub causal_attempts: u64,
    pub noncausal_attempts: u64,
}

fn draw_stationary_blocks<T: Real, R: Rng + ?Sized>(
    spec: &ModelSpec,
    order: usize,
    var_of: impl Fn(usize) -> T,
    rng: &mut R,
) -> Result<(Vec<T>, u64)> {
    let n = spec.n();
    let nn = n * n;
    if order == 0 {
        return Ok((Vec::new(), 0));
    }
    // a causal-only spec of the same order reuses the companion check
    let probe = ModelSpec::new(n, order, 0, spec.dist())?;
    let probe_len = probe.num_params();
    let mut buf = vec![T::zero(); probe_len];
    for attempt in 1..=REJECTION_BUDGET {
        for lag in 1..=order {
            let sd = var_of(lag).sqrt();
            for x in &mut buf[(lag - 1) * nn..lag * nn] {
                *x = sd * T::standard_normal(rng);
            }
        }
        if is_stationary(&probe, &buf) {
            buf.truncate(order * nn);
            return Ok((buf, attempt));
        }
    }
    Err(Error::RejectionBudget(REJECTION_BUDGET))
}

/// Draws `Σ ~ IW(c·I, df)` by the Bartlett construction.
fn draw_inv_wishart<T: Real, R: Rng + ?Sized>(n: usize, c: T, df: T, rng: &mut R) -> Mat<T> {
    let half = T::lit(0.5);
    // A lower triangular with A A' ~ W(I, df)
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        let chi2 = T::lit(2.0) * T::gamma(half * (df - T::lit(i as f64)), rng);
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = T::standard_normal(rng);
        }
    }
    // Σ = c (A A')^{-1} = c A'^{-1} A^{-1}
    let mut b = Mat::zeros(n, n); // A^{-1}, lower triangular
    for j in 0..n {
        b[(j, j)] = a[(j, j)].recip();
        for i in j + 1..n {
            let mut s = T::zero();
            for k in j..i {
                s += a[(i, k)] * b[(k, j)];
            }
            b[(i, j)] = -s / a[(i, i)];
        }
    }
    let mut sigma = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = T::zero();
            for k in i..n {
                s += b[(k, i)] * b[(k, j)];
            }
            sigma[(i, j)] = c * s;
            sigma[(j, i)] = c * s;
        }
    }
    sigma
}

/// One draw from the truncated prior.
pub fn draw_prior<T: Real, R: Rng + ?Sized>(
    spec: &ModelSpec,
    cfg: &PriorConfig<T>,
    rng: &mut R,
) -> Result<PriorDraw<T>> {
    let lay = spec.layout();
    let n = lay.n;
    let (psi, causal_attempts) = draw_stationary_blocks(spec, lay.r, |i| cfg.causal_var(i), rng)?;
    let (phi, noncausal_attempts) = draw_stationary_blocks(spec, lay.s, |i| cfg.noncausal_var(i), rng)?;
    let mut theta = Vec::with_capacity(lay.len);
    theta.extend(psi);
    theta.extend(phi);
    if n == 1 {
        let log_sd = cfg.log_scale_variance.sqrt() * T::standard_normal(rng);
        theta.push((T::lit(2.0) * log_sd).exp());
    } else {
        loop {
            let sigma = draw_inv_wishart(n, cfg.wishart_scale, cfg.wishart_df, rng);
            // near-singular draws can fail the factorisation in finite precision
            if Cholesky::new(&sigma).is_some() {
                theta.extend(sigma.vech());
                break;
            }
        }
    }
    if lay.nu.is_some() {
        let u = T::open01(rng);
        let nu = T::lit(2.0) - cfg.nu_mean * (-u * cfg.nu_window()).ln_1p();
        theta.push(nu.min(cfg.nu_max));
    }
    if lay.alpha.is_some() {
        let sd = cfg.skew_variance.sqrt();
        for _ in 0..n {
            let a = sd * T::standard_normal(rng);
            theta.push(if n == 1 { a.abs() } else { a });
        }
    }
    debug_assert_eq!(theta.len(), lay.len);
    Ok(PriorDraw {
        theta,
        causal_attempts,
        noncausal_attempts,
    })
}

/// `count` i.i.d. prior draws.
pub fn sample_prior<T: Real, R: Rng + ?Sized>(
    spec: &ModelSpec,
    cfg: &PriorConfig<T>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ParamVector<T>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    cfg.validate(spec.n())?;
    (0..count)
        .map(|_| ParamVector::from_raw(*spec, draw_prior(spec, cfg, rng)?.theta))
        .collect()
}
