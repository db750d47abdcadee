//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// Adaptive Simpson quadrature on a finite interval.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Integral over the real line through `x = t / (1 - t²)`, split at zero.
pub fn integrate_line(f: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - t * t;
        let x = t / d;
        let v = f(x) * (1.0 + t * t) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, -1.0, 0.0, 0.5 * tol) + integrate(&g, 0.0, 1.0, 0.5 * tol)
}

/// Integral over `(-∞, x]`.
pub fn integrate_below(f: &dyn Fn(f64) -> f64, x: f64, tol: f64) -> f64 {
    // s ∈ (0, 1] ↦ x - (1 - s)/s
    let g = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let v = f(x - (1.0 - s) / s) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value for statistic `d` on `n` samples.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Spectral radius by the Gelfand formula `‖A^k‖^{1/k}` with repeated
/// squaring and renormalisation; independent of any eigen-solver.
pub fn gelfand_radius(a: &[f64], n: usize) -> f64 {
    let mul = |x: &[f64], y: &[f64]| {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let xik = x[i * n + k];
                for j in 0..n {
                    out[i * n + j] += xik * y[k * n + j];
                }
            }
        }
        out
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut m = a.to_vec();
    let mut log_scale = 0.0;
    let squarings = 14; // A^(2^14)
    for _ in 0..squarings {
        let nm = norm(&m);
        if nm == 0.0 {
            return 0.0;
        }
        m.iter_mut().for_each(|v| *v /= nm);
        log_scale = 2.0 * (log_scale + nm.ln());
        m = mul(&m, &m);
    }
    let total = log_scale + norm(&m).ln().max(-700.0);
    (total / 2f64.powi(squarings)).exp()
}

/// Companion matrix (row-major) of `x_t = Σ_i A_i x_{t-i}` with blocks
/// given as row-major `n x n` matrices.
pub fn companion(blocks: &[Vec<f64>], n: usize) -> Vec<f64> {
    let p = blocks.len();
    let d = n * p;
    let mut c = vec![0.0; d * d];
    for (lag, b) in blocks.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                c[i * d + lag * n + j] = b[i * n + j];
            }
        }
    }
    for i in n..d {
        c[i * d + i - n] = 1.0;
    }
    c
}

/// Mean and standard error of a sample.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample autocorrelation at `lag`.
pub fn acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let den: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let num: f64 = (lag..n).map(|t| (x[t] - m) * (x[t - lag] - m)).sum();
    num / den
}

/// Median of a sample.
pub fn median(x: &mut [f64]) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Normal mean model with known variance and a normal prior; the evidence
/// and posterior are available in closed form.
pub struct ConjugateNormal {
    pub y: Vec<f64>,
    pub noise_var: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
}

impl ConjugateNormal {
    pub fn new(n: usize, seed: u64) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = marsmc_core::rng::stream(seed, marsmc_core::rng::Purpose::Simulate, 99, 0, 0);
        let y = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                1.3 + 0.8 * z
            })
            .collect();
        ConjugateNormal {
            y,
            noise_var: 0.64,
            prior_mean: 0.0,
            prior_var: 4.0,
        }
    }

    pub fn log_evidence(&self) -> f64 {
        let n = self.y.len() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        let ss: f64 = self.y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let (s2, t2) = (self.noise_var, self.prior_var);
        -0.5 * n * (2.0 * std::f64::consts::PI * s2).ln()
            - 0.5 * (1.0 + n * t2 / s2).ln()
            - ss / (2.0 * s2)
            - n * (ybar - self.prior_mean).powi(2) / (2.0 * (s2 + n * t2))
    }

    /// Posterior mean and standard deviation of the mean parameter.
    pub fn posterior(&self) -> (f64, f64) {
        let n = self.y.len() as f64;
        let ybar = self.y.iter().sum::<f64>() / n;
        let prec = 1.0 / self.prior_var + n / self.noise_var;
        (
            (self.prior_mean / self.prior_var + n * ybar / self.noise_var) / prec,
            prec.recip().sqrt(),
        )
    }
}

impl marsmc_core::Target<f64> for ConjugateNormal {
    fn dim(&self) -> usize {
        1
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let d = theta[0] - self.prior_mean;
        -0.5 * ((2.0 * std::f64::consts::PI * self.prior_var).ln() + d * d / self.prior_var)
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let c = -0.5 * (2.0 * std::f64::consts::PI * self.noise_var).ln();
        self.y
            .iter()
            .map(|v| c - (v - theta[0]).powi(2) / (2.0 * self.noise_var))
            .sum()
    }

    fn sample_prior(&self, rng: &mut marsmc_core::rng::StreamRng) -> marsmc_core::Result<Vec<f64>> {
        use rand_distr::{Distribution, StandardNormal};
        let z: f64 = StandardNormal.sample(rng);
        Ok(vec![self.prior_mean + self.prior_var.sqrt() * z])
    }
}
