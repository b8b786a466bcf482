//! Seeded synthetic return panels with known population correlation structure.
//!
//! Randomness comes from ChaCha20 keyed by the 64-bit seed (little-endian in
//! the first eight key bytes, remaining bytes zero). Every consumer draws from
//! its own ChaCha stream: stream 0 is the common factor, stream `1 + i` is the
//! idiosyncratic noise of stock `i`. Adding stocks therefore never changes the
//! draws of existing ones.
//!
//! Uniforms take the top 53 bits of each 64-bit output. Normals use the
//! Marsaglia polar method, returning both variates of each accepted pair.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{ReturnPanel, StockPanel};
use crate::scalar::Scalar;

pub const FACTOR_STREAM: u64 = 0;

/// Deterministic standard-normal stream.
pub struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }

    pub fn take(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

/// `count` weekday dates starting at (or after) `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

fn tickers(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("S{i:0width$}")).collect()
}

fn to_panel<T: Scalar>(
    n: usize,
    rows: usize,
    start: NaiveDate,
    values: Vec<f64>,
) -> Result<ReturnPanel<T>> {
    let values = values
        .into_iter()
        .map(|x| T::from_f64(x).ok_or_else(|| Error::validation("draw not representable")))
        .collect::<Result<Vec<T>>>()?;
    ReturnPanel::new(business_days(start, rows), tickers(n), values)
}

/// `r_it = vol · (√ρ · f_t + √(1 − ρ) · e_it)`: every pair has population correlation `ρ`.
pub fn equicorrelated_returns<T: Scalar>(
    n: usize,
    horizon: usize,
    rho: f64,
    vol: f64,
    seed: u64,
) -> Result<ReturnPanel<T>> {
    if n < 2 || horizon < 2 {
        return Err(Error::validation(format!(
            "need n >= 2 and horizon >= 2 (got n = {n}, horizon = {horizon})"
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::validation(format!("rho ({rho}) must lie in [0, 1)")));
    }
    if !(vol > 0.0) || !vol.is_finite() {
        return Err(Error::validation(format!("vol ({vol}) must be positive")));
    }
    let factor = NormalStream::new(seed, FACTOR_STREAM).take(horizon);
    let noise: Vec<Vec<f64>> = (0..n)
        .map(|i| NormalStream::new(seed, 1 + i as u64).take(horizon))
        .collect();
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut values = Vec::with_capacity(n * horizon);
    for t in 0..horizon {
        for e in &noise {
            values.push(vol * (a * factor[t] + b * e[t]));
        }
    }
    to_panel(n, horizon, default_start_date(), values)
}

/// One constant-parameter stretch of a [`FactorSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub start_day: usize,
    pub beta: f64,
    pub idio_vol: f64,
}

impl Regime {
    /// Population pairwise correlation `β² / (β² + σ²)` under unit factor variance.
    pub fn correlation(&self) -> f64 {
        let b2 = self.beta * self.beta;
        b2 / (b2 + self.idio_vol * self.idio_vol)
    }

    /// Population PC1 share in percent, `100 · (1 + (n − 1)ρ) / n`.
    pub fn pc1_pct(&self, n: usize) -> f64 {
        100.0 * (1.0 + (n as f64 - 1.0) * self.correlation()) / n as f64
    }
}

fn default_scale() -> f64 {
    0.01
}

/// One-factor market whose loading and idiosyncratic volatility change by regime.
///
/// Returns are `scale · (β f_t + σ e_it)` with unit-variance `f` and `e`.
/// `scale` only sets the return magnitude; correlations do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub n_stocks: usize,
    pub horizon: usize,
    pub regimes: Vec<Regime>,
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub start_date: Option<NaiveDate>,
}

impl FactorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_stocks < 2 || self.horizon < 2 {
            return Err(Error::validation(format!(
                "need n_stocks >= 2 and horizon >= 2 (got {} and {})",
                self.n_stocks, self.horizon
            )));
        }
        let first = self
            .regimes
            .first()
            .ok_or_else(|| Error::validation("at least one regime is required"))?;
        if first.start_day != 0 {
            return Err(Error::validation("the first regime must start on day 0"));
        }
        for w in self.regimes.windows(2) {
            if w[1].start_day <= w[0].start_day {
                return Err(Error::validation(
                    "regime start days must be strictly increasing",
                ));
            }
        }
        for r in &self.regimes {
            if r.start_day >= self.horizon {
                return Err(Error::validation(format!(
                    "regime starting on day {} is beyond the horizon {}",
                    r.start_day, self.horizon
                )));
            }
            if !(0.0..1.0).contains(&r.beta) {
                return Err(Error::validation(format!(
                    "beta ({}) must lie in [0, 1)",
                    r.beta
                )));
            }
            if !(r.idio_vol > 0.0) || !r.idio_vol.is_finite() {
                return Err(Error::validation(format!(
                    "idiosyncratic vol ({}) must be positive",
                    r.idio_vol
                )));
            }
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::validation(format!(
                "scale ({}) must be positive",
                self.scale
            )));
        }
        Ok(())
    }

    /// Regime in force on `day`.
    pub fn regime_at(&self, day: usize) -> &Regime {
        let k = self.regimes.partition_point(|r| r.start_day <= day);
        &self.regimes[k.saturating_sub(1)]
    }

    pub fn start(&self) -> NaiveDate {
        self.start_date.unwrap_or_else(default_start_date)
    }
}

pub fn factor_model_returns<T: Scalar>(spec: &FactorSpec) -> Result<ReturnPanel<T>> {
    spec.validate()?;
    let (n, horizon) = (spec.n_stocks, spec.horizon);
    let factor = NormalStream::new(spec.seed, FACTOR_STREAM).take(horizon);
    let noise: Vec<Vec<f64>> = (0..n)
        .map(|i| NormalStream::new(spec.seed, 1 + i as u64).take(horizon))
        .collect();
    let mut values = Vec::with_capacity(n * horizon);
    for (t, f) in factor.iter().enumerate() {
        let regime = spec.regime_at(t);
        for e in &noise {
            values.push(spec.scale * (regime.beta * f + regime.idio_vol * e[t]));
        }
    }
    to_panel(n, horizon, spec.start(), values)
}

/// Price panel whose simple returns are `returns`. Prices start at 100 on the
/// first return date and compound forward; no dividends.
pub fn prices_from_returns<T: Scalar>(returns: &ReturnPanel<T>) -> Result<StockPanel<T>> {
    let n_rows = returns.n_rows();
    let p = returns.n_cols();
    let start = returns
        .dates()
        .first()
        .copied()
        .ok_or_else(|| Error::validation("empty return panel"))?;
    let mut dates = returns.dates().to_vec();
    let after_last = *dates.last().expect("non-empty") + Days::new(1);
    dates.push(business_days(after_last, 1)[0]);
    debug_assert!(dates[0] == start);

    let mut close = Vec::with_capacity((n_rows + 1) * p);
    let mut level = vec![T::lit(100.0); p];
    close.extend(level.iter().map(|&v| Some(v)));
    for t in 0..n_rows {
        for (i, l) in level.iter_mut().enumerate() {
            *l *= T::one() + returns.get(t, i);
        }
        close.extend(level.iter().map(|&v| Some(v)));
    }
    let dividend = vec![T::zero(); close.len()];
    StockPanel::new(dates, returns.tickers().to_vec(), close, dividend)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = NormalStream::new(7, 0).take(10);
        assert_eq!(a, NormalStream::new(7, 0).take(10));
        assert_ne!(a, NormalStream::new(7, 1).take(10));
        assert_ne!(a, NormalStream::new(8, 0).take(10));
    }

    #[test]
    fn normal_moments() {
        let z = NormalStream::new(1, 0).take(200_000);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 / n.sqrt());
        // sd of the sample variance of a normal is sqrt(2/n)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days(NaiveDate::from_ymd_opt(2024, 1, 5).unwrap(), 3);
        assert_eq!(d[1], NaiveDate::from_ymd_opt(2024, 1, 8).unwrap());
        assert_eq!(d[2], NaiveDate::from_ymd_opt(2024, 1, 9).unwrap());
    }

    #[test]
    fn parameter_validation() {
        assert!(equicorrelated_returns::<f64>(1, 10, 0.5, 0.01, 1).is_err());
        assert!(equicorrelated_returns::<f64>(3, 10, 1.0, 0.01, 1).is_err());
        assert!(equicorrelated_returns::<f64>(3, 10, 0.5, 0.0, 1).is_err());
        let bad = FactorSpec {
            n_stocks: 3,
            horizon: 100,
            regimes: vec![Regime {
                start_day: 5,
                beta: 0.3,
                idio_vol: 1.0,
            }],
            seed: 1,
            scale: 0.01,
            start_date: None,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn regime_lookup_and_targets() {
        let spec = FactorSpec {
            n_stocks: 10,
            horizon: 100,
            regimes: vec![
                Regime {
                    start_day: 0,
                    beta: 0.3,
                    idio_vol: 0.6,
                },
                Regime {
                    start_day: 50,
                    beta: 0.8,
                    idio_vol: 0.6,
                },
            ],
            seed: 3,
            scale: 0.01,
            start_date: None,
        };
        assert_eq!(spec.regime_at(49).beta, 0.3);
        assert_eq!(spec.regime_at(50).beta, 0.8);
        assert!((spec.regimes[0].correlation() - 0.2).abs() < 1e-15);
        assert!((spec.regimes[1].pc1_pct(10) - 100.0 * (1.0 + 9.0 * 0.64) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn spec_json_defaults() {
        let spec: FactorSpec = serde_json::from_str(
            r#"{"n_stocks":4,"horizon":20,"seed":9,"regimes":[{"start_day":0,"beta":0.5,"idio_vol":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(spec.scale, 0.01);
        assert_eq!(spec.start(), default_start_date());
    }

    #[test]
    fn prices_compound_from_100() {
        let r = equicorrelated_returns::<f64>(2, 5, 0.3, 0.01, 11).unwrap();
        let p = prices_from_returns(&r).unwrap();
        assert_eq!(p.dates().len(), 6);
        assert_eq!(p.close(0, 0), Some(100.0));
        assert!((p.close(1, 1).unwrap() - 100.0 * (1.0 + r.get(0, 1))).abs() < 1e-12);
        let back = crate::market_data::simple_returns(&p).unwrap();
        for t in 0..5 {
            for i in 0..2 {
                assert!((back.get(t, i) - r.get(t, i)).abs() < 1e-13);
            }
        }
    }
}
