//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the PC1
//! variance-explained measure.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::matrix_stats::CorrelationMatrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Tolerance for the symmetry check on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues of a correlation matrix in `[−NEGATIVE_CLAMP_TOL, 0)` are set to zero.
pub const NEGATIVE_CLAMP_TOL: f64 = 1e-10;

/// Eigenvalues in descending order; eigenvector `k` is column `k`.
///
/// Each eigenvector is signed so its largest-magnitude component is positive
/// (lowest index wins a tie).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T = f64> {
    eigenvalues: Vec<T>,
    eigenvectors: Matrix<T>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Matrix<T> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<T> {
        self.eigenvectors.column(k)
    }

    pub fn largest(&self) -> Option<T> {
        self.eigenvalues.first().copied()
    }

    pub fn smallest(&self) -> Option<T> {
        self.eigenvalues.last().copied()
    }

    /// `V · diag(λ) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let p = self.dim();
        let v = &self.eigenvectors;
        Matrix::from_fn(p, p, |i, j| {
            (0..p)
                .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)])
                .sum()
        })
    }

    /// Zeroes negative eigenvalues down to `−tol`; anything more negative is an error.
    pub fn clamp_negative(mut self, tol: T) -> Result<Self> {
        for lambda in &mut self.eigenvalues {
            if *lambda < T::zero() {
                if *lambda < -tol {
                    return Err(Error::NegativeEigenvalue {
                        value: lambda.to_f64_lossy(),
                    });
                }
                *lambda = T::zero();
            }
        }
        Ok(self)
    }

    /// CSV with one `eigenvalue,…` row, then the eigenvector matrix row by row.
    pub fn write_csv<W: Write>(&self, tickers: &[String], out: W) -> Result<()> {
        let wrap = |e: csv::Error| Error::io("writing spectrum CSV", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend((1..=self.dim()).map(|k| format!("PC{k}")));
        w.write_record(&header).map_err(wrap)?;
        let mut row = vec!["eigenvalue".to_string()];
        row.extend(self.eigenvalues.iter().map(|&x| crate::format_sig17(x)));
        w.write_record(&row).map_err(wrap)?;
        for (i, t) in tickers.iter().enumerate() {
            let mut row = vec![t.clone()];
            row.extend(
                self.eigenvectors
                    .row(i)
                    .iter()
                    .map(|&x| crate::format_sig17(x)),
            );
            w.write_record(&row).map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("writing spectrum CSV", e))
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn eigendecompose<T: Scalar>(m: &Matrix<T>) -> Result<Spectrum<T>> {
    m.check_symmetric(T::tol(SYMMETRY_TOL))?;
    let p = m.rows();
    // Work on the exactly symmetrized input.
    let mut a = Matrix::from_fn(p, p, |i, j| (m[(i, j)] + m[(j, i)]) / T::lit(2.0));
    let mut v = Matrix::identity(p);
    jacobi_sweeps(&mut a, &mut v)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| {
        a[(y, y)]
            .partial_cmp(&a[(x, x)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues: Vec<T> = order.iter().map(|&k| a[(k, k)]).collect();
    let mut eigenvectors = Matrix::from_fn(p, p, |i, k| v[(i, order[k])]);
    for k in 0..p {
        let mut lead = 0;
        for i in 1..p {
            if eigenvectors[(i, k)].abs() > eigenvectors[(lead, k)].abs() {
                lead = i;
            }
        }
        if eigenvectors[(lead, k)] < T::zero() {
            for i in 0..p {
                eigenvectors[(i, k)] = -eigenvectors[(i, k)];
            }
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Cyclic Jacobi: rotate away every off-diagonal entry in turn until the
/// off-diagonal Frobenius mass is below machine precision relative to ‖A‖.
/// On return `a` is diagonal (eigenvalues) and `v` holds the eigenvectors.
fn jacobi_sweeps<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>) -> Result<()> {
    let p = a.rows();
    let norm = a.frobenius_norm();
    if norm == T::zero() || p < 2 {
        return Ok(());
    }
    let half = T::lit(0.5);
    for _sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..p {
            for j in (i + 1)..p {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        let off = (off + off).sqrt();
        if off <= T::epsilon() * norm {
            return Ok(());
        }
        for i in 0..p - 1 {
            for j in (i + 1)..p {
                let aij = a[(i, j)];
                if aij == T::zero() {
                    continue;
                }
                let (aii, ajj) = (a[(i, i)], a[(j, j)]);
                // Negligible relative to both pivots: drop it.
                if aij.abs() <= T::epsilon() * half * (aii.abs().min(ajj.abs())) {
                    a[(i, j)] = T::zero();
                    a[(j, i)] = T::zero();
                    continue;
                }
                let theta = (ajj - aii) / (aij + aij);
                let t = if theta.abs() > T::one() / T::epsilon() {
                    half / theta
                } else {
                    let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                a[(i, i)] = aii - t * aij;
                a[(j, j)] = ajj + t * aij;
                a[(i, j)] = T::zero();
                a[(j, i)] = T::zero();
                for k in 0..p {
                    if k != i && k != j {
                        let (aki, akj) = (a[(k, i)], a[(k, j)]);
                        let new_ki = c * aki - s * akj;
                        let new_kj = s * aki + c * akj;
                        a[(k, i)] = new_ki;
                        a[(i, k)] = new_ki;
                        a[(k, j)] = new_kj;
                        a[(j, k)] = new_kj;
                    }
                    let (vki, vkj) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * vki - s * vkj;
                    v[(k, j)] = s * vki + c * vkj;
                }
            }
        }
    }
    Err(Error::NonConvergence { sweeps: MAX_SWEEPS })
}

/// Spectrum of a correlation matrix with rounding-level negative eigenvalues clamped to zero.
pub fn correlation_spectrum<T: Scalar>(r: &CorrelationMatrix<T>) -> Result<Spectrum<T>> {
    eigendecompose(r.values())?.clamp_negative(T::tol(NEGATIVE_CLAMP_TOL))
}

/// Percent of total variance on the first principal component: `100 · λ₁ / p`.
pub fn pc1_variance_explained<T: Scalar>(spectrum: &Spectrum<T>, p: usize) -> Result<T> {
    if p == 0 {
        return Err(Error::validation("variable count must be positive"));
    }
    let lambda = spectrum
        .largest()
        .ok_or_else(|| Error::validation("empty spectrum"))?;
    Ok(T::lit(100.0) * lambda / T::from_usize(p).expect("count fits scalar"))
}
