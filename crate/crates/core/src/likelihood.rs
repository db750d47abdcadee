//! Conditional log-likelihood and the tempered posterior kernel.

use crate::densities::ErrorDensity;
use crate::error::{Error, Result};
use crate::model::{residuals_into, ModelSpec, SeriesData};
use crate::priors::{self, PriorConfig};
use crate::rng::StreamRng;
use crate::scalar::Real;
use crate::smc::Target;

/// Model, data and prior bundled into the unnormalised posterior
/// `p(y | θ) p(θ)`.
#[derive(Clone, Debug)]
pub struct PosteriorKernel<T> {
    spec: ModelSpec,
    data: SeriesData<T>,
    prior: PriorConfig<T>,
}

impl<T: Real> PosteriorKernel<T> {
    pub fn new(spec: ModelSpec, data: SeriesData<T>, prior: PriorConfig<T>) -> Result<Self> {
        if data.dim() != spec.n() {
            return Err(Error::Dimension(format!(
                "data has {} series, model expects {}",
                data.dim(),
                spec.n()
            )));
        }
        let need = spec.r() + spec.s();
        if data.len() <= need {
            return Err(Error::TooShort { len: data.len(), need });
        }
        prior.validate(spec.n())?;
        Ok(PosteriorKernel { spec, data, prior })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn data(&self) -> &SeriesData<T> {
        &self.data
    }

    pub fn prior(&self) -> &PriorConfig<T> {
        &self.prior
    }

    /// Number of likelihood terms, `T - r - s`.
    pub fn num_terms(&self) -> usize {
        self.data.len() - self.spec.r() - self.spec.s()
    }

    /// `Σ_t log p(u_t | θ)`; `-∞` when the error parameters are invalid
    /// (non-SPD scale, `ν ≤ 0`, ...).
    pub fn log_likelihood(&self, theta: &[T]) -> T {
        if theta.len() != self.spec.num_params() {
            return T::neg_infinity();
        }
        let Some(density) = ErrorDensity::from_theta(&self.spec, theta) else {
            return T::neg_infinity();
        };
        let mut u = Vec::new();
        if residuals_into(&self.spec, theta, self.data.values(), &mut u).is_err() {
            return T::neg_infinity();
        }
        let ll: T = u.chunks_exact(self.spec.n()).map(|ut| density.logpdf(ut)).sum();
        if ll.is_nan() {
            T::neg_infinity()
        } else {
            ll
        }
    }

    pub fn log_prior(&self, theta: &[T]) -> T {
        priors::log_prior(&self.spec, theta, &self.prior)
    }

    /// `ρ · log p(y | θ) + log p(θ)`.
    pub fn log_tempered_kernel(&self, theta: &[T], rho: T) -> T {
        let lp = self.log_prior(theta);
        if rho == T::zero() || lp == T::neg_infinity() {
            return lp;
        }
        rho * self.log_likelihood(theta) + lp
    }
}

impl<T: Real> Target<T> for PosteriorKernel<T> {
    fn dim(&self) -> usize {
        self.spec.num_params()
    }

    fn log_prior(&self, theta: &[T]) -> T {
        PosteriorKernel::log_prior(self, theta)
    }

    fn log_likelihood(&self, theta: &[T]) -> T {
        PosteriorKernel::log_likelihood(self, theta)
    }

    fn sample_prior(&self, rng: &mut StreamRng) -> Result<Vec<T>> {
        Ok(priors::draw_prior(&self.spec, &self.prior, rng)?.theta)
    }

    fn num_observations(&self) -> Option<usize> {
        Some(self.num_terms())
    }
}
