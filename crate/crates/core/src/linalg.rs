//! Minimal dense vector/matrix helpers for the fixed small shapes this crate
//! works with. Not a general linear-algebra layer.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::rng::SplitMix64;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Copy of the rows in `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Copy of the given columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            for &j in cols {
                data.push(row[j]);
            }
        }
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    fmath::sqrt(norm2_sq(a))
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    fmath::sqrt(s)
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Estimate of the largest eigenvalue of a symmetric PSD operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    /// Largest-eigenvalue estimate, inflated by a factor 1 + 1e-6 so that
    /// step sizes of the form `c / value` with `c < 2` stay admissible even
    /// though the underlying Rayleigh quotient is a lower bound.
    pub value: f64,
    /// False when the iteration cap was reached before the relative
    /// tolerance; the value is then the best (still safe) estimate.
    pub converged: bool,
    pub iterations: usize,
}

const POWER_TOL: f64 = 1e-8;
const POWER_CAP: usize = 1000;

/// Power iteration for the dominant eigenvalue of a symmetric PSD operator
/// given as `out = A v`. Start vector is all-ones with a seeded 1e-3 jitter
/// so runs are deterministic but never orthogonal to the dominant space.
pub(crate) fn largest_eigenvalue_sym<F>(dim: usize, seed: u64, mut apply: F) -> SpectralEstimate
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = SplitMix64::new(seed);
    let mut v: Vec<f64> = (0..dim)
        .map(|_| 1.0 + 1e-3 * (2.0 * rng.next_f64() - 1.0))
        .collect();
    let nv = norm2(&v);
    for x in &mut v {
        *x /= nv;
    }

    let mut av = vec![0.0; dim];
    let mut lam = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=POWER_CAP {
        iterations = it;
        apply(&v, &mut av);
        let lam_new = dot(&v, &av);
        let nrm = norm2(&av);
        if nrm == 0.0 {
            // operator annihilates the iterate; spectrum estimate is zero
            lam = 0.0;
            converged = true;
            break;
        }
        for (x, a) in v.iter_mut().zip(&av) {
            *x = a / nrm;
        }
        let diff = fmath::abs(lam_new - lam);
        lam = lam_new;
        if it > 1 && diff <= POWER_TOL * fmath::abs(lam_new) {
            converged = true;
            break;
        }
    }
    SpectralEstimate {
        value: lam * (1.0 + 1e-6),
        converged,
        iterations,
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky_factor(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "cholesky breakdown at pivot {i}: {s}"
                    )));
                }
                l.set(i, j, fmath::sqrt(s));
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(l)
}

/// Solve `A x = b` for symmetric positive-definite `A` via Cholesky.
pub(crate) fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky_factor(a)?;
    let n = l.rows();
    if b.len() != n {
        return Err(Error::Shape(format!(
            "rhs length {} does not match matrix order {n}",
            b.len()
        )));
    }
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    // backward: L^T x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_spd_system() {
        let a = Matrix::from_rows(vec![
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ])
        .unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3).map(|i| dot(a.row(i), &x_true)).collect();
        let x = cholesky_solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky_factor(&a), Err(Error::Numerical(_))));
    }

    #[test]
    fn power_iteration_finds_diagonal_spectrum() {
        // A = diag(3, 1) => lambda_max = 3
        let est = largest_eigenvalue_sym(2, 7, |v, out| {
            out[0] = 3.0 * v[0];
            out[1] = v[1];
        });
        assert!(est.converged);
        assert!((est.value - 3.0).abs() / 3.0 < 1e-5);
    }

    #[test]
    fn power_iteration_is_deterministic() {
        let run = || {
            largest_eigenvalue_sym(3, 42, |v, out| {
                out[0] = 2.0 * v[0] + 0.3 * v[1];
                out[1] = 0.3 * v[0] + 1.5 * v[1];
                out[2] = 0.9 * v[2];
            })
        };
        let a = run();
        let b = run();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }
}
