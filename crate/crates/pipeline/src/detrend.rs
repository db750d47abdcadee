//! Polynomial detrending by least squares.

use marsmc_core::{Mat, Series};
use nalgebra::{DMatrix, DVector};

use crate::error::{PipelineError, Result};

pub const DEFAULT_DEGREE: usize = 3;

/// Residuals of each series after an OLS fit on `(1, t, …, t^degree)`, with
/// `t` spread evenly over `[0, 1]`. Coefficients are `n × (degree + 1)`,
/// constant term first.
pub fn detrend(data: &Series, degree: usize) -> Result<(Series, Mat<f64>)> {
    let (len, n) = (data.len(), data.dim());
    if len <= degree + 1 {
        return Err(PipelineError::Config(format!(
            "degree-{degree} trend needs more than {} observations, got {len}",
            degree + 1
        )));
    }
    let x = design(len, degree);
    let qr = x.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    // a rank-deficient design shows up as a vanishing diagonal of R
    let scale = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * scale) {
        return Err(PipelineError::Config("degenerate trend design".into()));
    }
    let mut residuals = vec![0.0; len * n];
    let mut coefs = Mat::zeros(n, degree + 1);
    for j in 0..n {
        let y = DVector::from_iterator(len, (0..len).map(|t| data.values()[(t, j)]));
        // thin QR: R β = Qᵀ y
        let beta = r
            .solve_upper_triangular(&(q.transpose() * &y))
            .ok_or_else(|| PipelineError::Config("degenerate trend design".into()))?;
        let fit = &x * &beta;
        for t in 0..len {
            residuals[t * n + j] = y[t] - fit[t];
        }
        for (k, b) in beta.iter().enumerate() {
            coefs[(j, k)] = *b;
        }
    }
    Ok((data.with_values(Mat::from_row_major(len, n, residuals)?)?, coefs))
}

/// Vandermonde design on the normalised time grid.
pub fn design(len: usize, degree: usize) -> DMatrix<f64> {
    let denom = (len.max(2) - 1) as f64;
    DMatrix::from_fn(len, degree + 1, |t, k| (t as f64 / denom).powi(k as i32))
}

/// Evaluates the trend with the given coefficients at `len` points.
pub fn trend_values(coefs: &[f64], len: usize) -> Vec<f64> {
    let x = design(len, coefs.len().saturating_sub(1));
    (0..len)
        .map(|t| (0..coefs.len()).map(|k| x[(t, k)] * coefs[k]).sum())
        .collect()
}
