//! Special functions: log-gamma and the Student-t distribution function via
//! the regularised incomplete beta function, all kept in log space where
//! tails would otherwise underflow.

use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::lit(i as f64));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Multivariate log-gamma `ln Γ_p(a)`.
pub fn ln_mvgamma<T: Real>(p: usize, a: T) -> T {
    let pf = T::lit(p as f64);
    let mut out = pf * (pf - T::one()) / T::lit(4.0) * T::PI().ln();
    for j in 1..=p {
        out += ln_gamma(a + T::lit((1.0 - j as f64) / 2.0));
    }
    out
}

/// `ln B(a, b)`.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf<T: Real>(a: T, b: T, x: T) -> T {
    const MAX_ITER: usize = 500;
    let one = T::one();
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    let qab = a + b;
    let qap = a + one;
    let qam = a - one;
    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = d.recip();
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = T::lit(m as f64);
        let m2 = m + m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h *= del;
        if (del - one).abs() <= eps {
            break;
        }
    }
    h
}

/// `ln I_x(a, b)` where the caller supplies `ln x` and `ln(1 - x)`
/// separately so that neither end of the interval loses precision.
pub fn ln_inc_beta<T: Real>(ln_x: T, ln_xc: T, a: T, b: T) -> T {
    if ln_x == T::neg_infinity() {
        return T::neg_infinity();
    }
    if ln_xc == T::neg_infinity() {
        return T::zero();
    }
    let x = ln_x.exp();
    let switch = (a + T::one()) / (a + b + T::lit(2.0));
    if x < switch {
        a * ln_x + b * ln_xc - ln_beta(a, b) - a.ln() + beta_cf(a, b, x).ln()
    } else {
        let xc = ln_xc.exp();
        let upper = b * ln_xc + a * ln_x - ln_beta(b, a) - b.ln() + beta_cf(b, a, xc).ln();
        (-upper.exp()).ln_1p()
    }
}

/// Regularised incomplete beta `I_x(a, b)`.
pub fn inc_beta<T: Real>(x: T, a: T, b: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    ln_inc_beta(x.ln(), (-x).ln_1p(), a, b).exp()
}

/// `ln P(T_df <= x)` for a standard Student-t variable.
pub fn ln_student_t_cdf<T: Real>(x: T, df: T) -> T {
    let half = T::lit(0.5);
    if x == T::zero() {
        return half.ln();
    }
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    // z = df / (df + x^2) and 1 - z, both in log form
    let (ln_z, ln_zc) = if ax > T::one() {
        let ln_x2 = T::lit(2.0) * ax.ln();
        let ln1p = (df / (ax * ax)).ln_1p();
        (df.ln() - ln_x2 - ln1p, -ln1p)
    } else {
        let x2 = ax * ax;
        let ln_den = (df + x2).ln();
        (df.ln() - ln_den, x2.ln() - ln_den)
    };
    // ln P(T > |x|)
    let ln_tail = half.ln() + ln_inc_beta(ln_z, ln_zc, df * half, half);
    if x < T::zero() {
        ln_tail
    } else {
        (-ln_tail.exp()).ln_1p()
    }
}

/// `P(T_df <= x)`.
pub fn student_t_cdf<T: Real>(x: T, df: T) -> T {
    ln_student_t_cdf(x, df).exp()
}

/// Log-density of the standard (unit scale) Student-t.
pub fn ln_student_t_pdf<T: Real>(x: T, df: T) -> T {
    let half = T::lit(0.5);
    let one = T::one();
    ln_gamma((df + one) * half)
        - ln_gamma(df * half)
        - half * (df * T::PI()).ln()
        - (df + one) * half * (x * x / df).ln_1p()
}
