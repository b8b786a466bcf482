//! Small dense matrix type and the few factorizations the measures need.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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
            return Err(Error::validation(format!(
                "matrix data has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::validation("ragged rows"));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_row_major(n_rows, n_cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::validation(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Sub-matrix on the given row and column indices.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        Self::from_fn(row_idx.len(), col_idx.len(), |i, j| {
            self[(row_idx[i], col_idx[j])]
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    /// Errors with the worst offending pair if `|m_ij - m_ji| > tol` anywhere.
    pub fn check_symmetric(&self, tol: T) -> Result<()> {
        if !self.is_square() {
            return Err(Error::validation(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut worst = (0, 0, T::zero());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.2 || gap.is_nan() {
                    worst = (i, j, gap);
                }
            }
        }
        if worst.2 > tol || worst.2.is_nan() {
            return Err(Error::Asymmetric {
                row: worst.0,
                col: worst.1,
                gap: worst.2.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Lower Cholesky factor of a symmetric positive-definite matrix.
    /// Returns `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    /// Inverse of a symmetric positive-definite matrix via Cholesky, together
    /// with the reciprocal 1-norm condition number `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
    ///
    /// Fails with [`Error::Singular`] if the factorization breaks down or the
    /// reciprocal condition falls below `min_rcond`.
    pub fn spd_inverse(&self, min_rcond: T) -> Result<(Self, T)> {
        let n = self.rows;
        let l = self.cholesky().ok_or(Error::Singular { rcond: 0.0 })?;

        // Invert L column by column (forward substitution), then A⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = Self::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in c..i {
                    s -= l[(i, k)] * linv[(k, c)];
                }
                linv[(i, c)] = s / l[(i, i)];
            }
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = T::zero();
                for k in i..n {
                    s += linv[(k, i)] * linv[(k, j)];
                }
                inv[(i, j)] = s;
                inv[(j, i)] = s;
            }
        }

        let rcond = T::one() / (self.norm_one() * inv.norm_one());
        if !(rcond >= min_rcond) {
            return Err(Error::Singular {
                rcond: rcond.to_f64_lossy(),
            });
        }
        Ok((inv, rcond))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
