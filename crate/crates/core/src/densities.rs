//! Error densities: multivariate Student-t (Cauchy as ν = 1), the
//! hidden-truncation multivariate skewed-t, and the univariate two-piece
//! skewed-t. Everything is evaluated in log space.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Mat};
use crate::model::{ErrorDist, ModelSpec};
use crate::scalar::Real;
use crate::special::{ln_gamma, ln_student_t_cdf};

/// Parameters of one error distribution.
///
/// For `n = 1` the skewed family is the two-piece form with a positive scalar
/// skewness; for `n > 1` it is the multivariate skewed-t with linear skewness
/// form `α'u`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorDistParams<T> {
    pub dist: ErrorDist,
    pub sigma: Mat<T>,
    pub nu: Option<T>,
    pub alpha: Option<Vec<T>>,
}

impl<T: Real> ErrorDistParams<T> {
    pub fn new(dist: ErrorDist, sigma: Mat<T>, nu: Option<T>, alpha: Option<Vec<T>>) -> Result<Self> {
        let p = ErrorDistParams { dist, sigma, nu, alpha };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let n = self.sigma.rows();
        if !self.sigma.is_square() || n == 0 {
            return Err(Error::Dimension("scale matrix must be square".into()));
        }
        if !self.sigma.is_symmetric(T::lit(1e-12)) || Cholesky::new(&self.sigma).is_none() {
            return Err(Error::NotSpd);
        }
        if self.dist.has_nu() {
            match self.nu {
                Some(v) if v > T::lit(2.0) => {}
                Some(v) => return Err(Error::DegreesOfFreedom(v.as_f64())),
                None => return Err(Error::InvalidParameter("missing nu".into())),
            }
        }
        if self.dist.has_alpha() {
            match &self.alpha {
                Some(a) if a.len() == n => {
                    if n == 1 && !(a[0] > T::zero()) {
                        return Err(Error::InvalidParameter("univariate skewness must be positive".into()));
                    }
                }
                _ => return Err(Error::Dimension(format!("alpha must have {n} entries"))),
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    /// Builds the evaluator for this parameter set.
    pub fn density(&self) -> Result<ErrorDensity<T>> {
        let chol = Cholesky::new(&self.sigma).ok_or(Error::NotSpd)?;
        ErrorDensity::build(self.dist, chol, self.nu, self.alpha.as_deref()).ok_or(Error::NotSpd)
    }
}

/// Multivariate Student-t with scale matrix `Σ` and `ν` degrees of freedom.
#[derive(Clone, Debug)]
pub struct MvStudentT<T> {
    chol: Cholesky<T>,
    nu: T,
    half_nu_n: T,
    log_norm: T,
}

impl<T: Real> MvStudentT<T> {
    pub fn new(chol: Cholesky<T>, nu: T) -> Option<Self> {
        if !(nu > T::zero()) || !nu.is_finite() {
            return None;
        }
        let half = T::lit(0.5);
        let n = T::lit(chol.dim() as f64);
        let log_norm =
            ln_gamma((nu + n) * half) - ln_gamma(nu * half) - n * half * (T::PI() * nu).ln() - half * chol.log_det();
        Some(MvStudentT {
            chol,
            nu,
            half_nu_n: (nu + n) * half,
            log_norm,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    #[inline]
    pub fn nu(&self) -> T {
        self.nu
    }

    /// Log-density together with the quadratic form `u'Σ⁻¹u`.
    #[inline]
    pub fn logpdf_with_quad(&self, u: &[T]) -> (T, T) {
        let q = self.chol.quad_form(u);
        (self.log_norm - self.half_nu_n * (q / self.nu).ln_1p(), q)
    }

    #[inline]
    pub fn logpdf(&self, u: &[T]) -> T {
        self.logpdf_with_quad(u).0
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }
}

/// Multivariate skewed-t:
/// `2 t_n(u; Σ, ν) T₁(α'u √((ν+n)/(u'Σ⁻¹u + ν)); ν+n)`.
#[derive(Clone, Debug)]
pub struct MvSkewT<T> {
    base: MvStudentT<T>,
    alpha: Vec<T>,
}

impl<T: Real> MvSkewT<T> {
    pub fn new(base: MvStudentT<T>, alpha: Vec<T>) -> Option<Self> {
        if alpha.len() != base.dim() || alpha.iter().any(|a| !a.is_finite()) {
            return None;
        }
        Some(MvSkewT { base, alpha })
    }

    #[inline]
    pub fn logpdf(&self, u: &[T]) -> T {
        let (lt, q) = self.base.logpdf_with_quad(u);
        let nu = self.base.nu;
        let df = nu + T::lit(self.alpha.len() as f64);
        let arg = dot(&self.alpha, u) * (df / (q + nu)).sqrt();
        T::LN_2() + lt + ln_student_t_cdf(arg, df)
    }
}

/// Univariate two-piece skewed-t with scale `σ` and skewness `α > 0`:
/// `(2/(α+1/α)) [t(z/α) 1(z≥0) + t(αz) 1(z<0)] / σ`, `z = u/σ`.
#[derive(Clone, Debug)]
pub struct TwoPieceT<T> {
    scale: T,
    nu: T,
    alpha: T,
    log_norm: T,
}

impl<T: Real> TwoPieceT<T> {
    pub fn new(scale: T, nu: T, alpha: T) -> Option<Self> {
        if !(scale > T::zero()) || !(nu > T::zero()) || !(alpha > T::zero()) {
            return None;
        }
        if !scale.is_finite() || !nu.is_finite() || !alpha.is_finite() {
            return None;
        }
        let half = T::lit(0.5);
        let log_norm = T::LN_2() - (alpha + alpha.recip()).ln() - scale.ln() + ln_gamma((nu + T::one()) * half)
            - ln_gamma(nu * half)
            - half * (T::PI() * nu).ln();
        Some(TwoPieceT {
            scale,
            nu,
            alpha,
            log_norm,
        })
    }

    #[inline]
    pub fn logpdf(&self, u: T) -> T {
        let z = u / self.scale;
        let w = if z >= T::zero() { z / self.alpha } else { z * self.alpha };
        self.log_norm - (self.nu + T::one()) * T::lit(0.5) * (w * w / self.nu).ln_1p()
    }
}

/// Evaluator dispatching on the error family.
#[derive(Clone, Debug)]
pub enum ErrorDensity<T> {
    Student(MvStudentT<T>),
    Skew(MvSkewT<T>),
    TwoPiece(TwoPieceT<T>),
}

impl<T: Real> ErrorDensity<T> {
    /// `None` when the parameters leave the density's domain
    /// (`ν ≤ 0`, non-positive univariate skewness, non-finite inputs).
    pub fn build(dist: ErrorDist, chol: Cholesky<T>, nu: Option<T>, alpha: Option<&[T]>) -> Option<Self> {
        match dist {
            ErrorDist::Cauchy => MvStudentT::new(chol, T::one()).map(ErrorDensity::Student),
            ErrorDist::StudentT => MvStudentT::new(chol, nu?).map(ErrorDensity::Student),
            ErrorDist::SkewedT => {
                let nu = nu?;
                let alpha = alpha?;
                if chol.dim() == 1 {
                    TwoPieceT::new(chol.l(0, 0), nu, alpha[0]).map(ErrorDensity::TwoPiece)
                } else {
                    MvSkewT::new(MvStudentT::new(chol, nu)?, alpha.to_vec()).map(ErrorDensity::Skew)
                }
            }
        }
    }

    /// Builds the evaluator straight from a flat parameter vector.
    pub fn from_theta(spec: &ModelSpec, theta: &[T]) -> Option<Self> {
        let lay = spec.layout();
        let chol = Cholesky::from_vech(lay.n, &theta[lay.scale_block()])?;
        let nu = lay.nu.map(|i| theta[i]);
        let alpha = lay.alpha.map(|i| &theta[i..i + lay.n]);
        Self::build(spec.dist(), chol, nu, alpha)
    }

    #[inline]
    pub fn logpdf(&self, u: &[T]) -> T {
        match self {
            ErrorDensity::Student(d) => d.logpdf(u),
            ErrorDensity::Skew(d) => d.logpdf(u),
            ErrorDensity::TwoPiece(d) => d.logpdf(u[0]),
        }
    }
}

/// `log t_n(u; Σ, ν)`.
pub fn logpdf_mvt<T: Real>(u: &[T], sigma: &Mat<T>, nu: T) -> Result<T> {
    check_dims(u, sigma)?;
    let chol = Cholesky::new(sigma).ok_or(Error::NotSpd)?;
    let d = MvStudentT::new(chol, nu)
        .ok_or_else(|| Error::InvalidParameter("degrees of freedom must be positive".into()))?;
    Ok(d.logpdf(u))
}

/// Multivariate Cauchy; shares the Student-t code path with `ν = 1`.
pub fn logpdf_cauchy<T: Real>(u: &[T], sigma: &Mat<T>) -> Result<T> {
    logpdf_mvt(u, sigma, T::one())
}

pub fn logpdf_mvskewt<T: Real>(u: &[T], sigma: &Mat<T>, nu: T, alpha: &[T]) -> Result<T> {
    check_dims(u, sigma)?;
    if alpha.len() != u.len() {
        return Err(Error::Dimension("alpha and u differ in length".into()));
    }
    let chol = Cholesky::new(sigma).ok_or(Error::NotSpd)?;
    let base = MvStudentT::new(chol, nu)
        .ok_or_else(|| Error::InvalidParameter("degrees of freedom must be positive".into()))?;
    let d = MvSkewT::new(base, alpha.to_vec()).ok_or_else(|| Error::InvalidParameter("non-finite skewness".into()))?;
    Ok(d.logpdf(u))
}

/// Two-piece univariate skewed-t with scale `sigma` (not variance).
pub fn logpdf_uni_skewt<T: Real>(u: T, sigma: T, nu: T, alpha: T) -> Result<T> {
    TwoPieceT::new(sigma, nu, alpha)
        .map(|d| d.logpdf(u))
        .ok_or_else(|| Error::InvalidParameter("sigma, nu and alpha must be positive".into()))
}

fn check_dims<T: Real>(u: &[T], sigma: &Mat<T>) -> Result<()> {
    if !sigma.is_square() || sigma.rows() != u.len() {
        return Err(Error::Dimension(format!(
            "u has {} entries but sigma is {}x{}",
            u.len(),
            sigma.rows(),
            sigma.cols()
        )));
    }
    if !sigma.is_symmetric(T::lit(1e-12)) {
        return Err(Error::NotSpd);
    }
    Ok(())
}

/// Draws i.i.d. errors from prepared parameters.
#[derive(Clone, Debug)]
pub struct ErrorSampler<T> {
    n: usize,
    nu: T,
    chol: Cholesky<T>,
    /// Skew direction `δ = Σα / √(1 + α'Σα)` and the factor of `Σ - δδ'`.
    skew: Option<(Vec<T>, Cholesky<T>)>,
    two_piece_alpha: Option<T>,
}

impl<T: Real> ErrorSampler<T> {
    pub fn new(params: &ErrorDistParams<T>) -> Result<Self> {
        params.validate()?;
        let n = params.dim();
        let chol = Cholesky::new(&params.sigma).ok_or(Error::NotSpd)?;
        let nu = params.nu.unwrap_or_else(T::one);
        let mut skew = None;
        let mut two_piece_alpha = None;
        if params.dist.has_alpha() {
            let alpha = params.alpha.as_ref().expect("validated");
            if n == 1 {
                two_piece_alpha = Some(alpha[0]);
            } else {
                let s_alpha = params.sigma.mul_vec(alpha);
                let norm = (T::one() + dot(alpha, &s_alpha)).sqrt();
                let delta: Vec<T> = s_alpha.iter().map(|&x| x / norm).collect();
                let mut resid = params.sigma.clone();
                for i in 0..n {
                    for j in 0..n {
                        resid[(i, j)] -= delta[i] * delta[j];
                    }
                }
                let rc = Cholesky::new(&resid).ok_or(Error::NotSpd)?;
                skew = Some((delta, rc));
            }
        }
        Ok(ErrorSampler {
            n,
            nu,
            chol,
            skew,
            two_piece_alpha,
        })
    }

    /// Fills `out` (length `n`) with one draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        let n = self.n;
        let half = T::lit(0.5);
        // chi-square(ν)/ν mixing variable
        let mix = (T::lit(2.0) * T::gamma(self.nu * half, rng) / self.nu).sqrt();
        if let Some(a) = self.two_piece_alpha {
            let t = T::standard_normal(rng).abs() / mix;
            let p_pos = a * a / (T::one() + a * a);
            let sd = self.chol.l(0, 0);
            out[0] = if T::open01(rng) < p_pos {
                t * a * sd
            } else {
                -t / a * sd
            };
            return;
        }
        let z: Vec<T> = (0..n).map(|_| T::standard_normal(rng)).collect();
        let gauss = match &self.skew {
            None => self.chol.mul_lower(&z),
            Some((delta, rc)) => {
                let x0 = T::standard_normal(rng).abs();
                let w = rc.mul_lower(&z);
                (0..n).map(|i| delta[i] * x0 + w[i]).collect()
            }
        };
        for i in 0..n {
            out[i] = gauss[i] / mix;
        }
    }
}

/// `count` i.i.d. draws as a `count x n` matrix.
pub fn sample<T: Real, R: Rng + ?Sized>(params: &ErrorDistParams<T>, count: usize, rng: &mut R) -> Result<Mat<T>> {
    let sampler = ErrorSampler::new(params)?;
    let n = params.dim();
    let mut out = Mat::zeros(count, n);
    for i in 0..count {
        sampler.draw(rng, out.row_mut(i));
    }
    Ok(out)
}
