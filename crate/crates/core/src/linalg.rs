//! Small dense linear algebra: the model never needs more than a handful of
//! rows, so everything here is a plain row-major buffer.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Convenience constructor from `f64` literals.
    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let converted: Vec<Vec<T>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| T::lit(x)).collect())
            .collect();
        Self::from_rows(&converted)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Mat<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Exact symmetry up to a relative tolerance.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                let a = self[(i, j)];
                let b = self[(j, i)];
                let scale = a.abs().max(b.abs()).max(T::one());
                if (a - b).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Lower-triangular half-vectorisation, column by column.
    pub fn vech(&self) -> Vec<T> {
        let n = self.rows;
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in j..n {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`Mat::vech`]: rebuilds the symmetric matrix.
    pub fn from_vech(n: usize, vech: &[T]) -> Result<Self> {
        if vech.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension(format!(
                "vech of an {n}x{n} matrix has {} entries, got {}",
                n * (n + 1) / 2,
                vech.len()
            )));
        }
        let mut m = Self::zeros(n, n);
        let mut k = 0;
        for j in 0..n {
            for i in j..n {
                m[(i, j)] = vech[k];
                m[(j, i)] = vech[k];
                k += 1;
            }
        }
        Ok(m)
    }

    /// Column-stacking vectorisation.
    pub fn vec_col_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn from_col_major(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = values[j * rows + i];
            }
        }
        Ok(m)
    }

    /// Converts element type, e.g. `f64` to `f32`.
    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| U::lit(x.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower Cholesky factor `L` with `A = L L'`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors the lower triangle of `a`; `None` unless `a` is positive
    /// definite with finite entries.
    pub fn new(a: &Mat<T>) -> Option<Self> {
        if !a.is_square() {
            return None;
        }
        let n = a.rows();
        let mut lower = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            lower[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                let v = s / djj;
                if !v.is_finite() {
                    return None;
                }
                lower[i * n + j] = v;
            }
        }
        Some(Cholesky { n, lower })
    }

    /// Factors the symmetric matrix stored as its half-vectorisation.
    pub fn from_vech(n: usize, vech: &[T]) -> Option<Self> {
        Mat::from_vech(n, vech).ok().and_then(|m| Self::new(&m))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> T {
        self.lower[i * self.n + j]
    }

    pub fn lower(&self) -> Mat<T> {
        Mat::from_row_major(self.n, self.n, self.lower.clone()).expect("square buffer")
    }

    /// `log |A|`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.n).map(|i| two * self.l(i, i).ln()).sum()
    }

    /// Forward substitution `L x = b`, written into `out`.
    pub fn solve_lower_into(&self, b: &[T], out: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * out[k];
            }
            out[i] = s / self.lower[i * n + i];
        }
    }

    /// `u' A^{-1} u`.
    pub fn quad_form(&self, u: &[T]) -> T {
        let n = self.n;
        match n {
            1 => {
                let z = u[0] / self.lower[0];
                z * z
            }
            2 => {
                let z0 = u[0] / self.lower[0];
                let z1 = (u[1] - self.lower[2] * z0) / self.lower[3];
                z0 * z0 + z1 * z1
            }
            _ => {
                let mut z = vec![T::zero(); n];
                self.solve_lower_into(u, &mut z);
                dot(&z, &z)
            }
        }
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|i| dot(&self.lower[i * n..i * n + i + 1], &z[..=i]))
            .collect()
    }

    /// `A^{-1}`.
    pub fn inverse(&self) -> Mat<T> {
        let n = self.n;
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut x = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[c] = T::one();
            self.solve_lower_into(&e, &mut y);
            // back substitution with L'
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in i + 1..n {
                    s -= self.lower[k * n + i] * x[k];
                }
                x[i] = s / self.lower[i * n + i];
            }
            for r in 0..n {
                inv[(r, c)] = x[r];
            }
        }
        inv
    }
}

/// Spectral radius of a real square matrix, computed in `f64`.
///
/// Closed forms cover the 1x1 and 2x2 cases; larger matrices go through a
/// real Schur decomposition. Returns `None` if the decomposition fails to
/// converge.
pub fn spectral_radius(rows: usize, entries: &[f64]) -> Option<f64> {
    debug_assert_eq!(entries.len(), rows * rows);
    match rows {
        0 => Some(0.0),
        1 => Some(entries[0].abs()),
        2 => {
            let (a, b, c, d) = (entries[0], entries[1], entries[2], entries[3]);
            let half_tr = 0.5 * (a + d);
            let det = a * d - b * c;
            let disc = half_tr * half_tr - det;
            if disc >= 0.0 {
                let root = disc.sqrt();
                Some((half_tr + root).abs().max((half_tr - root).abs()))
            } else {
                Some(det.sqrt())
            }
        }
        _ => {
            let m = nalgebra::DMatrix::from_row_slice(rows, rows, entries);
            let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)?;
            Some(
                schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0_f64, f64::max),
            )
        }
    }
}
