//! Bayesian estimation of mixed causal–noncausal autoregressions
//! (MAR and VMAR) with a likelihood-tempered sequential Monte Carlo sampler.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, with `*F32`
//! variants for single precision.
//!
//! ```
//! use marsmc_core::{simulate, ErrorDist, Kernel, PriorConfig, SmcConfig};
//!
//! let dgp = simulate::table2_dgp::<f64>(ErrorDist::Cauchy, 7);
//! let data = simulate::simulate(&dgp).unwrap();
//! let kernel = Kernel::new(*dgp.spec(), data, PriorConfig::default()).unwrap();
//! let cfg = SmcConfig { particles: 200, stages: 10, ..Default::default() };
//! let result = marsmc_core::smc::run(&kernel, &cfg).unwrap();
//! assert!(result.log_mdd.is_finite());
//! ```

// `!(x > 0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod densities;
pub mod error;
pub mod likelihood;
pub mod linalg;
pub mod model;
pub mod priors;
pub mod rng;
pub mod scalar;
pub mod select;
pub mod simulate;
pub mod smc;
pub mod special;

pub use error::{Error, Result};
pub use likelihood::PosteriorKernel;
pub use linalg::{Cholesky, Mat};
pub use model::{ErrorDist, Layout, ModelParams, ModelSpec, ParamVector, SeriesData};
pub use priors::PriorConfig;
pub use scalar::Real;
pub use select::{CandidateGrid, CandidateOutcome, SelectionReport};
pub use simulate::DgpSpec;
pub use smc::{ParticleCloud, SmcConfig, SmcRunResult, StageDiagnostics, Target};

pub type Params = ParamVector<f64>;
pub type Series = SeriesData<f64>;
pub type Kernel = PosteriorKernel<f64>;
pub type Priors = PriorConfig<f64>;
pub type Cloud = ParticleCloud<f64>;
pub type RunResult = SmcRunResult<f64>;
pub type Dgp = DgpSpec<f64>;

pub type ParamsF32 = ParamVector<f32>;
pub type SeriesF32 = SeriesData<f32>;
pub type KernelF32 = PosteriorKernel<f32>;
pub type PriorsF32 = PriorConfig<f32>;
pub type CloudF32 = ParticleCloud<f32>;
pub type RunResultF32 = SmcRunResult<f32>;
pub type DgpF32 = DgpSpec<f32>;
