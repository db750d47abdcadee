//! Simulation of mixed causal–noncausal paths.
//!
//! Residuals are defined as `u_t = Ψ(L) v_t` with `v_t = Φ(L⁻¹) y_t`, so a
//! path is built by inverting the two filters in the opposite order: the
//! causal recursion runs forward from zero initial values to give `v`, then
//! the noncausal recursion runs backward from zero terminal values to give
//! `y`. Burn-in at both ends absorbs the boundary conditions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::densities::{ErrorDistParams, ErrorSampler};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{ErrorDist, ModelSpec, ParamVector, SeriesData};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;

pub const DEFAULT_BURN: usize = 200;
pub const CAUCHY_BURN: usize = 500;
pub const MIN_BURN: usize = 50;

/// A data-generating process: true parameters, output length and burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DgpSpec<T> {
    params: ParamVector<T>,
    len: usize,
    burn: usize,
    seed: u64,
}

impl<T: Real> DgpSpec<T> {
    pub fn new(params: ParamVector<T>, len: usize, burn: usize, seed: u64) -> Result<Self> {
        if !params.is_stationary() {
            return Err(Error::NonStationary);
        }
        if burn < MIN_BURN {
            return Err(Error::InvalidParameter(format!("burn-in must be at least {MIN_BURN}")));
        }
        let spec = params.spec();
        if len <= spec.r() + spec.s() {
            return Err(Error::TooShort {
                len,
                need: spec.r() + spec.s(),
            });
        }
        ErrorSampler::new(&error_params(&params)?)?;
        Ok(DgpSpec {
            params,
            len,
            burn,
            seed,
        })
    }

    /// Burn-in suited to the error family.
    pub fn default_burn(dist: ErrorDist) -> usize {
        match dist {
            ErrorDist::Cauchy => CAUCHY_BURN,
            _ => DEFAULT_BURN,
        }
    }

    pub fn params(&self) -> &ParamVector<T> {
        &self.params
    }

    pub fn spec(&self) -> &ModelSpec {
        self.params.spec()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn burn(&self) -> usize {
        self.burn
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        DgpSpec { seed, ..self.clone() }
    }

    pub fn with_burn(&self, burn: usize) -> Result<Self> {
        Self::new(self.params.clone(), self.len, burn, self.seed)
    }
}

fn error_params<T: Real>(params: &ParamVector<T>) -> Result<ErrorDistParams<T>> {
    let m = params.decode();
    ErrorDistParams::new(params.spec().dist(), m.sigma, m.nu, m.alpha)
}

/// A simulated path together with the noise that drove it.
#[derive(Clone, Debug)]
pub struct SimulatedPath<T> {
    pub data: SeriesData<T>,
    /// Noise at the same `T` time points as `data`.
    pub noise: Mat<T>,
}

/// Maps a full noise sequence to the path it generates (no trimming).
pub fn filter_noise<T: Real>(spec: &ModelSpec, theta: &[T], noise: &Mat<T>) -> Result<Mat<T>> {
    let lay = spec.layout();
    let n = lay.n;
    if noise.cols() != n {
        return Err(Error::Dimension(format!(
            "noise has {} columns, model expects {n}",
            noise.cols()
        )));
    }
    if theta.len() != lay.len {
        return Err(Error::Dimension(format!(
            "expected {} parameters, got {}",
            lay.len,
            theta.len()
        )));
    }
    let nn = n * n;
    let len = noise.rows();
    // causal pass, forward: v_t = u_t + Σ_i Ψ_i v_{t-i}
    let mut v = Mat::zeros(len, n);
    for t in 0..len {
        for i in 0..n {
            let mut acc = noise[(t, i)];
            for lag in 1..=lay.r.min(t) {
                let blk = &theta[(lag - 1) * nn..lag * nn];
                for j in 0..n {
                    acc += blk[j * n + i] * v[(t - lag, j)];
                }
            }
            v[(t, i)] = acc;
        }
    }
    // noncausal pass, backward: y_t = v_t + Σ_q Φ_q y_{t+q}
    let mut y = Mat::zeros(len, n);
    for t in (0..len).rev() {
        for i in 0..n {
            let mut acc = v[(t, i)];
            for q in 1..=lay.s.min(len - 1 - t) {
                let blk = &theta[lay.phi + (q - 1) * nn..lay.phi + q * nn];
                for j in 0..n {
                    acc += blk[j * n + i] * y[(t + q, j)];
                }
            }
            y[(t, i)] = acc;
        }
    }
    Ok(y)
}

/// Simulates `T` observations plus the generating noise.
pub fn simulate_with_noise<T: Real, R: Rng + ?Sized>(dgp: &DgpSpec<T>, rng: &mut R) -> Result<SimulatedPath<T>> {
    let spec = dgp.spec();
    let n = spec.n();
    let total = dgp.len + 2 * dgp.burn;
    let sampler = ErrorSampler::new(&error_params(&dgp.params)?)?;
    let mut noise = Mat::zeros(total, n);
    for t in 0..total {
        sampler.draw(rng, noise.row_mut(t));
    }
    let y = filter_noise(spec, dgp.params.as_slice(), &noise)?;
    let central = |m: &Mat<T>| {
        Mat::from_row_major(
            dgp.len,
            n,
            m.as_slice()[dgp.burn * n..(dgp.burn + dgp.len) * n].to_vec(),
        )
    };
    Ok(SimulatedPath {
        data: SeriesData::new(central(&y)?)?,
        noise: central(&noise)?,
    })
}

/// Simulates `T` observations.
pub fn simulate_path<T: Real, R: Rng + ?Sized>(dgp: &DgpSpec<T>, rng: &mut R) -> Result<SeriesData<T>> {
    Ok(simulate_with_noise(dgp, rng)?.data)
}

/// Simulates with the stream derived from the DGP's own seed.
pub fn simulate<T: Real>(dgp: &DgpSpec<T>) -> Result<SeriesData<T>> {
    let mut rng = stream(dgp.seed, Purpose::Simulate, 0, 0, 0);
    simulate_path(dgp, &mut rng)
}

/// True parameters of the bivariate VMAR(1,1) Monte Carlo design:
/// `Ψ₁ = [[0.8, 0.1], [-0.2, 0.3]]`, `Φ₁ = [[0.6, -0.4], [-0.4, 0.1]]`,
/// `Σ = [[2, 0.5], [0.5, 2]]`, `ν = 3`, `α = (2, 2)`.
pub fn table2_params<T: Real>(dist: ErrorDist) -> ParamVector<T> {
    let spec = ModelSpec::new(2, 1, 1, dist).expect("valid spec");
    let m = |rows: [[f64; 2]; 2]| Mat::from_f64_rows(&rows).expect("2x2");
    let alpha = [T::lit(2.0), T::lit(2.0)];
    ParamVector::encode(
        spec,
        &[m([[0.8, 0.1], [-0.2, 0.3]])],
        &[m([[0.6, -0.4], [-0.4, 0.1]])],
        &m([[2.0, 0.5], [0.5, 2.0]]),
        dist.has_nu().then(|| T::lit(3.0)),
        dist.has_alpha().then_some(&alpha[..]),
    )
    .expect("design parameters are valid")
}

/// The bivariate Monte Carlo design with `T = 150`.
pub fn table2_dgp<T: Real>(dist: ErrorDist, seed: u64) -> DgpSpec<T> {
    DgpSpec::new(table2_params(dist), 150, DgpSpec::<T>::default_burn(dist), seed).expect("design DGP is valid")
}
