//! Diversification-potential measures for equity return panels.
//!
//! Four rolling-window measures are computed from dividend-adjusted returns:
//! the Kaiser-Meyer-Olkin statistic, the share of variance on the first
//! principal component, the number of stocks kept by iterative PCA
//! selection, and the diversification ratio of the equal-weight portfolio.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The `*64`
//! aliases below fix the usual double-precision instantiation.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diversification;
pub mod error;
pub mod linalg;
pub mod market_data;
pub mod matrix_stats;
pub mod pca;
pub mod rolling;
pub mod scalar;
pub mod selection;
pub mod synth;

pub use diversification::{diversification_ratio, equal_weights, WeightVector};
pub use error::{Error, ErrorKind, Result};
pub use linalg::Matrix;
pub use market_data::{
    adjust_prices, complete_universe, complete_universe_full, dividend_factors, load_index,
    load_panel, load_panel_files, simple_returns, write_panel_csv, IndexSeries, ReturnPanel,
    ReturnWindow, StockPanel,
};
pub use matrix_stats::{
    correlation_matrix, covariance_matrix, kmo, partial_correlations, CorrelationMatrix,
    CovarianceMatrix, PartialCorrelationMatrix,
};
pub use pca::{correlation_spectrum, eigendecompose, pc1_variance_explained, Spectrum};
pub use rolling::{
    index_window_return, run_returns, run_series, run_window, window_schedule, Field, MeasureSet,
    MetricsRow, MetricsSeries, WindowConfig,
};
pub use scalar::Scalar;
pub use selection::{marked_for_deletion, select_stocks, SelectionCriteria, SelectionResult};
pub use synth::{
    equicorrelated_returns, factor_model_returns, prices_from_returns, FactorSpec, Regime,
};

pub type Matrix64 = Matrix<f64>;
pub type StockPanel64 = StockPanel<f64>;
pub type ReturnPanel64 = ReturnPanel<f64>;
pub type IndexSeries64 = IndexSeries<f64>;
pub type CorrelationMatrix64 = CorrelationMatrix<f64>;
pub type CovarianceMatrix64 = CovarianceMatrix<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type SelectionCriteria64 = SelectionCriteria<f64>;
pub type SelectionResult64 = SelectionResult<f64>;
pub type WindowConfig64 = WindowConfig<f64>;
pub type MetricsSeries64 = MetricsSeries<f64>;

pub type Matrix32 = Matrix<f32>;
pub type CorrelationMatrix32 = CorrelationMatrix<f32>;
pub type Spectrum32 = Spectrum<f32>;

/// Scientific notation with 17 significant digits; parses back to the same value.
pub fn format_sig17<T: Scalar>(x: T) -> String {
    format!("{x:.16e}")
}
