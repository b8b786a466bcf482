//! Diversification ratio of long-only portfolios: weighted average volatility
//! over portfolio volatility, `wᵀσ / √(wᵀΣw)`.

use crate::error::{Error, Result};
use crate::matrix_stats::CovarianceMatrix;
use crate::scalar::Scalar;

/// Long-only weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T = f64> {
    tickers: Vec<String>,
    weights: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    pub fn new(tickers: Vec<String>, weights: Vec<T>) -> Result<Self> {
        if tickers.len() != weights.len() {
            return Err(Error::validation(format!(
                "{} tickers but {} weights",
                tickers.len(),
                weights.len()
            )));
        }
        if tickers.is_empty() {
            return Err(Error::validation("portfolio has no assets"));
        }
        if let Some((t, w)) = tickers
            .iter()
            .zip(&weights)
            .find(|(_, w)| !(**w >= T::zero()))
        {
            return Err(Error::validation(format!(
                "weight {w} on {t} is negative; portfolios are long-only"
            )));
        }
        let total: T = weights.iter().copied().sum();
        if !((total - T::one()).abs() <= T::tol(1e-12)) {
            return Err(Error::validation(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { tickers, weights })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// The 1/N portfolio.
pub fn equal_weights<T: Scalar>(tickers: &[String]) -> Result<WeightVector<T>> {
    if tickers.is_empty() {
        return Err(Error::validation("cannot weight an empty ticker list"));
    }
    let w = T::one() / T::from_usize(tickers.len()).expect("count fits scalar");
    WeightVector::new(tickers.to_vec(), vec![w; tickers.len()])
}

pub fn diversification_ratio<T: Scalar>(
    w: &WeightVector<T>,
    cov: &CovarianceMatrix<T>,
) -> Result<T> {
    if w.tickers() != cov.tickers() {
        return Err(Error::validation(
            "weight tickers do not match covariance tickers",
        ));
    }
    let s = cov.values();
    let diag = s.diagonal();
    if let Some((i, v)) = diag.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
        return Err(Error::validation(format!(
            "variance of {} is negative ({v})",
            cov.tickers()[i]
        )));
    }
    let weights = w.weights();
    let weighted_vol: T = weights
        .iter()
        .zip(&diag)
        .map(|(&wi, &vi)| wi * vi.sqrt())
        .sum();
    let sw = s.matvec(weights);
    let variance: T = weights.iter().zip(&sw).map(|(&a, &b)| a * b).sum();
    if !(variance > T::zero()) {
        return Err(Error::DegeneratePortfolio {
            variance: variance.to_f64_lossy(),
        });
    }
    Ok(weighted_vol / variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}")).collect()
    }

    fn diag_cov(vars: &[f64]) -> CovarianceMatrix<f64> {
        let n = vars.len();
        let m = Matrix::from_fn(n, n, |i, j| if i == j { vars[i] } else { 0.0 });
        CovarianceMatrix::new(names(n), m).unwrap()
    }

    #[test]
    fn equal_weight_vectors() {
        assert_eq!(equal_weights::<f64>(&names(1)).unwrap().weights(), &[1.0]);
        assert_eq!(
            equal_weights::<f64>(&names(4)).unwrap().weights(),
            &[0.25; 4]
        );
        let w = equal_weights::<f64>(&names(3)).unwrap();
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(equal_weights::<f64>(&[]).is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(WeightVector::new(names(2), vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(names(2), vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(names(2), vec![0.5]).is_err());
    }

    #[test]
    fn single_asset_is_exactly_one() {
        let w = equal_weights(&names(1)).unwrap();
        assert_eq!(
            diversification_ratio(&w, &diag_cov(&[0.0437])).unwrap(),
            1.0
        );
    }

    #[test]
    fn uncorrelated_equal_vol_is_root_n() {
        let w = equal_weights(&names(4)).unwrap();
        let dr = diversification_ratio(&w, &diag_cov(&[0.01; 4])).unwrap();
        assert!((dr - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_asset_hand_example() {
        let w = equal_weights(&names(2)).unwrap();
        let dr = diversification_ratio(&w, &diag_cov(&[0.01, 0.04])).unwrap();
        let expected = 0.15 / 0.0125f64.sqrt();
        assert!((dr - expected).abs() < 1e-12);
        assert!((dr - 1.3416).abs() < 1e-4);
    }

    #[test]
    fn zero_variance_portfolio() {
        let w = equal_weights(&names(2)).unwrap();
        assert!(matches!(
            diversification_ratio(&w, &diag_cov(&[0.0, 0.0])),
            Err(Error::DegeneratePortfolio { .. })
        ));
    }

    #[test]
    fn mismatched_tickers() {
        let w = WeightVector::new(vec!["X".into(), "Y".into()], vec![0.5, 0.5]).unwrap();
        assert!(diversification_ratio(&w, &diag_cov(&[0.01, 0.01])).is_err());
    }
}
