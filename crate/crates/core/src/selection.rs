//! Iterative PCA stock selection.
//!
//! Each round decomposes the correlation matrix of the surviving stocks. Every
//! principal component whose eigenvalue is below the deletion threshold marks
//! the stock with the largest absolute loading on it; marked stocks are
//! removed and the process repeats until the smallest eigenvalue reaches the
//! stop threshold or only `min_retained` stocks remain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_stats::CorrelationMatrix;
use crate::pca::{correlation_spectrum, Spectrum};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria<T = f64> {
    deletion_threshold: T,
    stop_threshold: T,
    min_retained: usize,
}

impl<T: Scalar> SelectionCriteria<T> {
    pub fn new(deletion_threshold: T, stop_threshold: T, min_retained: usize) -> Result<Self> {
        if !(stop_threshold > T::zero()) {
            return Err(Error::validation(format!(
                "stop threshold ({stop_threshold}) must be positive"
            )));
        }
        if !(stop_threshold <= deletion_threshold) {
            return Err(Error::validation(format!(
                "stop threshold ({stop_threshold}) must not exceed deletion threshold ({deletion_threshold}); \
                 the rule stop <= deletion guarantees every round deletes a stock"
            )));
        }
        if min_retained < 2 {
            return Err(Error::validation(format!(
                "min_retained ({min_retained}) must be at least 2"
            )));
        }
        Ok(Self {
            deletion_threshold,
            stop_threshold,
            min_retained,
        })
    }

    pub fn deletion_threshold(&self) -> T {
        self.deletion_threshold
    }

    pub fn stop_threshold(&self) -> T {
        self.stop_threshold
    }

    pub fn min_retained(&self) -> usize {
        self.min_retained
    }
}

impl<T: Scalar> Default for SelectionCriteria<T> {
    /// Deletion 0.7, stop 0.5, floor of two stocks.
    fn default() -> Self {
        Self {
            deletion_threshold: T::lit(0.7),
            stop_threshold: T::lit(0.5),
            min_retained: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T = f64> {
    pub retained: Vec<String>,
    pub rounds: usize,
    pub deleted_per_round: Vec<Vec<String>>,
    pub final_min_eigenvalue: T,
}

impl<T: Scalar + Serialize> SelectionResult<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("selection result serializes")
    }
}

/// Index of the largest |loading| in `v`. Exact ties (within a few ulps) go to
/// the higher index, so the lower-index stock is the one kept.
fn max_loading_index<T: Scalar>(v: &[T]) -> usize {
    let tie = T::epsilon() * T::lit(8.0);
    let mut best = 0;
    for i in 1..v.len() {
        let (a, b) = (v[i].abs(), v[best].abs());
        if a >= b - tie * b.max(T::one()) {
            best = i;
        }
    }
    best
}

/// Indices marked for deletion, in order of increasing eigenvalue, deduplicated.
fn marked_indices<T: Scalar>(spectrum: &Spectrum<T>, deletion_threshold: T) -> Vec<usize> {
    let mut marked = Vec::new();
    for k in (0..spectrum.dim()).rev() {
        if !(spectrum.eigenvalues()[k] < deletion_threshold) {
            break;
        }
        let i = max_loading_index(&spectrum.eigenvector(k));
        if !marked.contains(&i) {
            marked.push(i);
        }
    }
    marked
}

/// Tickers carrying the largest |loading| on each component with eigenvalue
/// strictly below `deletion_threshold`.
pub fn marked_for_deletion<T: Scalar>(
    spectrum: &Spectrum<T>,
    tickers: &[String],
    deletion_threshold: T,
) -> Vec<String> {
    marked_indices(spectrum, deletion_threshold)
        .into_iter()
        .map(|i| tickers[i].clone())
        .collect()
}

pub fn select_stocks<T: Scalar>(
    r: &CorrelationMatrix<T>,
    criteria: &SelectionCriteria<T>,
) -> Result<SelectionResult<T>> {
    select_stocks_from(r, correlation_spectrum(r)?, criteria)
}

/// As [`select_stocks`], starting from an already computed spectrum of `r`.
pub fn select_stocks_from<T: Scalar>(
    r: &CorrelationMatrix<T>,
    first: Spectrum<T>,
    criteria: &SelectionCriteria<T>,
) -> Result<SelectionResult<T>> {
    if first.dim() != r.dim() {
        return Err(Error::validation(
            "spectrum does not match correlation matrix",
        ));
    }
    let mut current = r.clone();
    let mut spectrum = first;
    let mut deleted_per_round = Vec::new();
    loop {
        let min = spectrum.smallest().unwrap_or(T::infinity());
        if min >= criteria.stop_threshold || current.dim() <= criteria.min_retained {
            break;
        }
        let mut marked = marked_indices(&spectrum, criteria.deletion_threshold);
        // Never go below the floor; earlier entries come from smaller eigenvalues.
        marked.truncate(current.dim() - criteria.min_retained);
        if marked.is_empty() {
            break;
        }
        deleted_per_round.push(
            marked
                .iter()
                .map(|&i| current.tickers()[i].clone())
                .collect(),
        );
        let survivors: Vec<usize> = (0..current.dim()).filter(|i| !marked.contains(i)).collect();
        current = current.restrict(&survivors);
        spectrum = correlation_spectrum(&current)?;
    }
    Ok(SelectionResult {
        retained: current.tickers().to_vec(),
        rounds: deleted_per_round.len(),
        deleted_per_round,
        final_min_eigenvalue: spectrum.smallest().unwrap_or(T::nan()),
    })
}
