//! Mixed causal-noncausal VAR specification `Ψ(L) Φ(L⁻¹) y_t = u_t`:
//! parameter layout, residual filtering and the stationarity check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Cholesky, Mat};
use crate::scalar::Real;

/// Margin below one that the companion spectral radius must clear.
pub const STATIONARITY_MARGIN: f64 = 1e-8;

/// Error distribution family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorDist {
    Cauchy,
    StudentT,
    SkewedT,
}

impl ErrorDist {
    pub const ALL: [ErrorDist; 3] = [ErrorDist::Cauchy, ErrorDist::StudentT, ErrorDist::SkewedT];

    pub fn label(self) -> &'static str {
        match self {
            ErrorDist::Cauchy => "cauchy",
            ErrorDist::StudentT => "student-t",
            ErrorDist::SkewedT => "skewed-t",
        }
    }

    pub fn has_nu(self) -> bool {
        !matches!(self, ErrorDist::Cauchy)
    }

    pub fn has_alpha(self) -> bool {
        matches!(self, ErrorDist::SkewedT)
    }
}

impl fmt::Display for ErrorDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ErrorDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cauchy" => Ok(ErrorDist::Cauchy),
            "student-t" | "studentt" | "t" => Ok(ErrorDist::StudentT),
            "skewed-t" | "skewedt" | "skew-t" => Ok(ErrorDist::SkewedT),
            other => Err(Error::InvalidModel(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Dimensions, orders and error family of a (V)MAR(r, s) model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ModelSpec {
    n: usize,
    r: usize,
    s: usize,
    dist: ErrorDist,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    r: usize,
    s: usize,
    dist: ErrorDist,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ModelSpec::new(raw.n, raw.r, raw.s, raw.dist)
    }
}

impl ModelSpec {
    pub fn new(n: usize, r: usize, s: usize, dist: ErrorDist) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("series dimension must be at least 1".into()));
        }
        if r + s == 0 {
            return Err(Error::InvalidModel("r + s must be at least 1".into()));
        }
        Ok(ModelSpec { n, r, s, dist })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn dist(&self) -> ErrorDist {
        self.dist
    }

    /// Total order `p = r + s`.
    #[inline]
    pub fn order(&self) -> usize {
        self.r + self.s
    }

    pub fn with_dist(self, dist: ErrorDist) -> Self {
        ModelSpec { dist, ..self }
    }

    /// Number of free parameters `k`.
    pub fn num_params(&self) -> usize {
        self.layout().len
    }

    pub fn layout(&self) -> Layout {
        let n = self.n;
        let block = n * n;
        let psi = 0;
        let phi = psi + self.r * block;
        let scale = phi + self.s * block;
        let mut next = scale + n * (n + 1) / 2;
        let nu = if self.dist.has_nu() {
            next += 1;
            Some(next - 1)
        } else {
            None
        };
        let alpha = if self.dist.has_alpha() {
            next += n;
            Some(next - n)
        } else {
            None
        };
        Layout {
            n,
            r: self.r,
            s: self.s,
            phi,
            scale,
            nu,
            alpha,
            len: next,
        }
    }

    /// Short label such as `VMAR(1,1)-student-t`.
    pub fn label(&self) -> String {
        let kind = if self.n == 1 { "MAR" } else { "VMAR" };
        format!("{kind}({},{})-{}", self.r, self.s, self.dist)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (n={})", self.label(), self.n)
    }
}

/// Offsets of each parameter block inside the flat vector.
///
/// Coefficient blocks are stored column-major (`vec`), the scale matrix as its
/// lower half (`vech`), followed by `ν` and then `α` when the family has them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub r: usize,
    pub s: usize,
    pub phi: usize,
    pub scale: usize,
    pub nu: Option<usize>,
    pub alpha: Option<usize>,
    pub len: usize,
}

impl Layout {
    #[inline]
    pub fn psi_block(&self, lag: usize) -> std::ops::Range<usize> {
        let b = self.n * self.n;
        (lag - 1) * b..lag * b
    }

    #[inline]
    pub fn phi_block(&self, lead: usize) -> std::ops::Range<usize> {
        let b = self.n * self.n;
        self.phi + (lead - 1) * b..self.phi + lead * b
    }

    #[inline]
    pub fn scale_block(&self) -> std::ops::Range<usize> {
        self.scale..self.scale + self.n * (self.n + 1) / 2
    }

    /// Number of coefficient entries (Ψ and Φ blocks).
    #[inline]
    pub fn num_coefficients(&self) -> usize {
        self.scale
    }

    /// Human-readable names, one per slot, 1-based matrix indices.
    pub fn param_names(&self) -> Vec<String> {
        let n = self.n;
        let mut names = Vec::with_capacity(self.len);
        for (sym, order) in [("Psi", self.r), ("Phi", self.s)] {
            for lag in 1..=order {
                for j in 0..n {
                    for i in 0..n {
                        names.push(format!("{sym}{lag}[{},{}]", i + 1, j + 1));
                    }
                }
            }
        }
        for j in 0..n {
            for i in j..n {
                names.push(format!("Sigma[{},{}]", i + 1, j + 1));
            }
        }
        if self.nu.is_some() {
            names.push("nu".to_string());
        }
        if self.alpha.is_some() {
            for i in 0..n {
                names.push(format!("alpha[{}]", i + 1));
            }
        }
        names
    }
}

/// Decoded, matrix-shaped parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub psi: Vec<Mat<T>>,
    pub phi: Vec<Mat<T>>,
    pub sigma: Mat<T>,
    pub nu: Option<T>,
    pub alpha: Option<Vec<T>>,
}

/// Flat parameter vector together with the spec that gives it a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ParamVector<T> {
    spec: ModelSpec,
    theta: Vec<T>,
}

impl<T: Real> ParamVector<T> {
    /// Wraps a raw vector; only the length is checked.
    pub fn from_raw(spec: ModelSpec, theta: Vec<T>) -> Result<Self> {
        let k = spec.num_params();
        if theta.len() != k {
            return Err(Error::Dimension(format!(
                "{} needs {k} parameters, got {}",
                spec.label(),
                theta.len()
            )));
        }
        Ok(ParamVector { spec, theta })
    }

    /// Packs matrices into the flat layout, validating shapes, SPD-ness of
    /// `sigma` and the presence/range of `nu` and `alpha`.
    pub fn encode(
        spec: ModelSpec,
        psi: &[Mat<T>],
        phi: &[Mat<T>],
        sigma: &Mat<T>,
        nu: Option<T>,
        alpha: Option<&[T]>,
    ) -> Result<Self> {
        let n = spec.n();
        if psi.len() != spec.r() || phi.len() != spec.s() {
            return Err(Error::Dimension(format!(
                "expected {} causal and {} noncausal matrices, got {} and {}",
                spec.r(),
                spec.s(),
                psi.len(),
                phi.len()
            )));
        }
        for m in psi.iter().chain(phi) {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Dimension(format!(
                    "coefficient matrix is {}x{}, expected {n}x{n}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if sigma.rows() != n || sigma.cols() != n {
            return Err(Error::Dimension(format!(
                "scale matrix is {}x{}, expected {n}x{n}",
                sigma.rows(),
                sigma.cols()
            )));
        }
        if !sigma.is_symmetric(T::lit(1e-12)) || Cholesky::new(sigma).is_none() {
            return Err(Error::NotSpd);
        }
        let dist = spec.dist();
        match (dist.has_nu(), nu) {
            (true, Some(v)) if v > T::lit(2.0) => {}
            (true, Some(v)) => return Err(Error::DegreesOfFreedom(v.as_f64())),
            (true, None) => return Err(Error::InvalidParameter(format!("{dist} requires nu"))),
            (false, Some(_)) => return Err(Error::InvalidParameter(format!("{dist} takes no nu"))),
            (false, None) => {}
        }
        match (dist.has_alpha(), alpha) {
            (true, Some(a)) if a.len() == n => {
                if n == 1 && !(a[0] > T::zero()) {
                    return Err(Error::InvalidParameter("univariate skewness must be positive".into()));
                }
            }
            (true, Some(a)) => return Err(Error::Dimension(format!("alpha has {} entries, expected {n}", a.len()))),
            (true, None) => return Err(Error::InvalidParameter(format!("{dist} requires alpha"))),
            (false, Some(_)) => return Err(Error::InvalidParameter(format!("{dist} takes no alpha"))),
            (false, None) => {}
        }

        let mut theta = Vec::with_capacity(spec.num_params());
        for m in psi.iter().chain(phi) {
            theta.extend(m.vec_col_major());
        }
        theta.extend(sigma.vech());
        theta.extend(nu);
        if let Some(a) = alpha {
            theta.extend_from_slice(a);
        }
        debug_assert_eq!(theta.len(), spec.num_params());
        Ok(ParamVector { spec, theta })
    }

    pub fn decode(&self) -> ModelParams<T> {
        let lay = self.spec.layout();
        let n = lay.n;
        let block = |range: std::ops::Range<usize>| {
            Mat::from_col_major(n, n, &self.theta[range]).expect("layout block is n x n")
        };
        ModelParams {
            psi: (1..=lay.r).map(|i| block(lay.psi_block(i))).collect(),
            phi: (1..=lay.s).map(|q| block(lay.phi_block(q))).collect(),
            sigma: Mat::from_vech(n, &self.theta[lay.scale_block()]).expect("vech length"),
            nu: lay.nu.map(|i| self.theta[i]),
            alpha: lay.alpha.map(|i| self.theta[i..i + n].to_vec()),
        }
    }

    #[inline]
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.theta
    }

    pub fn into_vec(self) -> Vec<T> {
        self.theta
    }

    pub fn is_stationary(&self) -> bool {
        is_stationary(&self.spec, &self.theta)
    }

    pub fn cast<U: Real>(&self) -> ParamVector<U> {
        ParamVector {
            spec: self.spec,
            theta: self.theta.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }
}

impl<T> AsRef<[T]> for ParamVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.theta
    }
}

/// Observed series, one row per time point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeriesData<T> {
    values: Mat<T>,
    names: Vec<String>,
    dates: Option<Vec<String>>,
}

impl<T: Real> SeriesData<T> {
    pub fn new(values: Mat<T>) -> Result<Self> {
        let names = (1..=values.cols()).map(|i| format!("y{i}")).collect();
        Self::with_labels(values, names, None)
    }

    pub fn with_labels(values: Mat<T>, names: Vec<String>, dates: Option<Vec<String>>) -> Result<Self> {
        if values.rows() == 0 {
            return Err(Error::TooShort { len: 0, need: 0 });
        }
        if values.cols() == 0 {
            return Err(Error::Dimension("series has no columns".into()));
        }
        if names.len() != values.cols() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                names.len(),
                values.cols()
            )));
        }
        if let Some(d) = &dates {
            if d.len() != values.rows() {
                return Err(Error::Dimension(format!(
                    "{} dates for {} observations",
                    d.len(),
                    values.rows()
                )));
            }
        }
        if let Some(pos) = values.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite observation at row {}, column {}",
                pos / values.cols() + 1,
                pos % values.cols() + 1
            )));
        }
        Ok(SeriesData { values, names, dates })
    }

    /// Sample size `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    /// Series dimension `n`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn values(&self) -> &Mat<T> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dates(&self) -> Option<&[String]> {
        self.dates.as_deref()
    }

    /// Same labels, new values of identical shape.
    pub fn with_values(&self, values: Mat<T>) -> Result<Self> {
        if values.rows() != self.len() || values.cols() != self.dim() {
            return Err(Error::Dimension("replacement values change the shape".into()));
        }
        Self::with_labels(values, self.names.clone(), self.dates.clone())
    }
}

fn companion_radius<T: Real>(n: usize, blocks: &[T], order: usize) -> Option<f64> {
    let dim = n * order;
    let mut c = vec![0.0_f64; dim * dim];
    for lag in 0..order {
        let b = &blocks[lag * n * n..(lag + 1) * n * n];
        for i in 0..n {
            for j in 0..n {
                // column-major block storage
                c[i * dim + lag * n + j] = b[j * n + i].as_f64();
            }
        }
    }
    for i in n..dim {
        c[i * dim + (i - n)] = 1.0;
    }
    spectral_radius(dim, &c)
}

/// True iff both companion matrices have spectral radius below
/// `1 - STATIONARITY_MARGIN`. An empty polynomial is stationary.
pub fn is_stationary<T: Real>(spec: &ModelSpec, theta: &[T]) -> bool {
    let lay = spec.layout();
    let n = lay.n;
    let ok = |blocks: &[T], order: usize| {
        if order == 0 {
            return true;
        }
        if blocks.iter().any(|x| !x.is_finite()) {
            return false;
        }
        companion_radius(n, blocks, order).is_some_and(|rho| rho < 1.0 - STATIONARITY_MARGIN)
    };
    ok(&theta[..lay.phi], lay.r) && ok(&theta[lay.phi..lay.scale], lay.s)
}

/// Writes the `T - r - s` residual rows into `out` (row-major, `n` columns).
///
/// First applies the noncausal filter `v_t = y_t - Σ_q Φ_q y_{t+q}`, then the
/// causal one `u_t = v_t - Σ_i Ψ_i v_{t-i}`. Output row 0 is time `r`
/// (0-based), i.e. the first observation with a full set of lags.
pub fn residuals_into<T: Real>(spec: &ModelSpec, theta: &[T], y: &Mat<T>, out: &mut Vec<T>) -> Result<()> {
    let lay = spec.layout();
    let n = lay.n;
    let (r, s) = (lay.r, lay.s);
    let t_len = y.rows();
    if y.cols() != n {
        return Err(Error::Dimension(format!(
            "data has {} columns, model expects {n}",
            y.cols()
        )));
    }
    if t_len <= r + s {
        return Err(Error::TooShort {
            len: t_len,
            need: r + s,
        });
    }
    let nn = n * n;
    // v_t for t in 0..T-s
    let v_len = t_len - s;
    let mut v = Vec::with_capacity(v_len * n);
    for t in 0..v_len {
        for i in 0..n {
            let mut acc = y[(t, i)];
            for q in 1..=s {
                let blk = &theta[lay.phi + (q - 1) * nn..lay.phi + q * nn];
                let row = y.row(t + q);
                for j in 0..n {
                    acc -= blk[j * n + i] * row[j];
                }
            }
            v.push(acc);
        }
    }
    out.clear();
    out.reserve((v_len - r) * n);
    for t in r..v_len {
        for i in 0..n {
            let mut acc = v[t * n + i];
            for lag in 1..=r {
                let blk = &theta[(lag - 1) * nn..lag * nn];
                let prev = &v[(t - lag) * n..(t - lag + 1) * n];
                for j in 0..n {
                    acc -= blk[j * n + i] * prev[j];
                }
            }
            out.push(acc);
        }
    }
    Ok(())
}

/// Residual matrix with `T - r - s` rows.
pub fn residuals<T: Real>(spec: &ModelSpec, theta: &[T], data: &SeriesData<T>) -> Result<Mat<T>> {
    let mut buf = Vec::new();
    residuals_into(spec, theta, data.values(), &mut buf)?;
    let rows = buf.len() / spec.n();
    Mat::from_row_major(rows, spec.n(), buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table2(dist: ErrorDist) -> ParamVector<f64> {
        let spec = ModelSpec::new(2, 1, 1, dist).unwrap();
        let psi = Mat::from_f64_rows(&[[0.8, 0.1], [-0.2, 0.3]]).unwrap();
        let phi = Mat::from_f64_rows(&[[0.6, -0.4], [-0.4, 0.1]]).unwrap();
        let sigma = Mat::from_f64_rows(&[[2.0, 0.5], [0.5, 2.0]]).unwrap();
        let nu = dist.has_nu().then_some(3.0);
        let alpha = [2.0, 2.0];
        let alpha = dist.has_alpha().then_some(&alpha[..]);
        ParamVector::encode(spec, &[psi], &[phi], &sigma, nu, alpha).unwrap()
    }

    #[test]
    fn parameter_counts() {
        let k = |n, r, s, d| ModelSpec::new(n, r, s, d).unwrap().num_params();
        assert_eq!(k(2, 1, 1, ErrorDist::Cauchy), 11);
        assert_eq!(k(2, 1, 1, ErrorDist::StudentT), 12);
        assert_eq!(k(2, 1, 1, ErrorDist::SkewedT), 14);
        assert_eq!(k(1, 1, 0, ErrorDist::Cauchy), 2);
        assert_eq!(k(3, 2, 1, ErrorDist::SkewedT), 9 * 3 + 6 + 1 + 3);
    }

    #[test]
    fn rejects_empty_orders() {
        assert!(ModelSpec::new(2, 0, 0, ErrorDist::Cauchy).is_err());
        assert!(ModelSpec::new(0, 1, 0, ErrorDist::Cauchy).is_err());
    }

    #[test]
    fn encode_table2_cauchy() {
        let p = table2(ErrorDist::Cauchy);
        assert_eq!(
            p.as_slice(),
            &[0.8, -0.2, 0.1, 0.3, 0.6, -0.4, -0.4, 0.1, 2.0, 0.5, 2.0]
        );
        assert_eq!(p.spec().layout().param_names()[1], "Psi1[2,1]");
    }

    #[test]
    fn encode_decode_identity() {
        for d in ErrorDist::ALL {
            let p = table2(d);
            let m = p.decode();
            let again = ParamVector::encode(*p.spec(), &m.psi, &m.phi, &m.sigma, m.nu, m.alpha.as_deref()).unwrap();
            assert_eq!(again, p);
        }
    }

    #[test]
    fn encode_zero_identity_case() {
        let spec = ModelSpec::new(1, 1, 0, ErrorDist::Cauchy).unwrap();
        let p = ParamVector::<f64>::encode(spec, &[Mat::zeros(1, 1)], &[], &Mat::identity(1), None, None).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn encode_errors() {
        let spec = ModelSpec::new(2, 1, 1, ErrorDist::StudentT).unwrap();
        let z = Mat::<f64>::zeros(2, 2);
        let bad = Mat::from_f64_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let eye = Mat::identity(2);
        assert_eq!(
            ParamVector::encode(spec, &[z.clone()], &[z.clone()], &bad, Some(3.0), None),
            Err(Error::NotSpd)
        );
        assert_eq!(
            ParamVector::encode(spec, &[z.clone()], &[z.clone()], &eye, Some(2.0), None),
            Err(Error::DegreesOfFreedom(2.0))
        );
        assert!(matches!(
            ParamVector::encode(spec, &[z.clone()], &[], &eye, Some(3.0), None),
            Err(Error::Dimension(_))
        ));
        assert!(ParamVector::encode(spec, &[z.clone()], &[z], &eye, None, None).is_err());
    }

    #[test]
    fn stationarity_examples() {
        let spec = ModelSpec::new(1, 1, 0, ErrorDist::Cauchy).unwrap();
        assert!(!is_stationary(&spec, &[1.05, 1.0]));
        assert!(is_stationary(&spec, &[0.0, 1.0]));
        assert!(table2(ErrorDist::Cauchy).is_stationary());
        let spec2 = ModelSpec::new(2, 1, 0, ErrorDist::Cauchy).unwrap();
        assert!(is_stationary(&spec2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0]));
        // the margin excludes the unit root itself
        assert!(!is_stationary(&spec, &[1.0, 1.0]));
        assert!(!is_stationary(&spec, &[f64::NAN, 1.0]));
    }

    #[test]
    fn residual_hand_expansion() {
        let spec = ModelSpec::new(1, 1, 1, ErrorDist::Cauchy).unwrap();
        let y = SeriesData::new(Mat::from_row_major(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let u = residuals(&spec, &[0.5, 0.5, 1.0], &y).unwrap();
        assert_eq!(u.as_slice(), &[0.5, 0.75]);
    }

    #[test]
    fn residual_identity_and_unit_root() {
        let spec = ModelSpec::new(1, 1, 1, ErrorDist::Cauchy).unwrap();
        let vals = vec![0.3, -1.2, 2.5, 0.7, 4.0];
        let y = SeriesData::new(Mat::from_row_major(5, 1, vals.clone()).unwrap()).unwrap();
        let u = residuals(&spec, &[0.0, 0.0, 1.0], &y).unwrap();
        assert_eq!(u.as_slice(), &vals[1..4]);

        let spec = ModelSpec::new(1, 1, 0, ErrorDist::Cauchy).unwrap();
        let y = SeriesData::new(Mat::from_row_major(6, 1, vec![3.0; 6]).unwrap()).unwrap();
        let u = residuals(&spec, &[1.0, 1.0], &y).unwrap();
        assert_eq!(u.rows(), 5);
        assert!(u.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn residuals_need_enough_rows() {
        let spec = ModelSpec::new(1, 1, 1, ErrorDist::Cauchy).unwrap();
        let y = SeriesData::new(Mat::from_row_major(2, 1, vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(
            residuals(&spec, &[0.1, 0.1, 1.0], &y),
            Err(Error::TooShort { len: 2, need: 2 })
        );
    }
}
