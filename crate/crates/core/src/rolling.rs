//! Rolling-window driver for the four measures.
//!
//! Windows are `length` consecutive return rows, started every `step` rows.
//! Each window yields one [`MetricsRow`] dated at its last return date. A
//! failure in one measure is recorded in that field and the rest still run.

use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::diversification::{diversification_ratio, equal_weights};
use crate::error::{Error, Result};
use crate::format_sig17;
use crate::market_data::{
    simple_returns, IndexSeries, ReturnPanel, ReturnWindow, StockPanel, DATE_FORMAT,
};
use crate::matrix_stats::{correlation_matrix, covariance_matrix, kmo};
use crate::pca::{correlation_spectrum, pc1_variance_explained};
use crate::scalar::Scalar;
use crate::selection::{select_stocks_from, SelectionCriteria};

pub const DEFAULT_WINDOW_LENGTH: usize = 504;
pub const DEFAULT_STEP: usize = 5;

pub const CSV_HEADER: [&str; 6] = [
    "window_end",
    "kmo",
    "pc1_pct",
    "n_selected",
    "dr",
    "index_return",
];
pub const DIAGNOSTICS_HEADER: [&str; 3] = ["window_end", "field", "error"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig<T = f64> {
    length: usize,
    step: usize,
    criteria: SelectionCriteria<T>,
}

impl<T: Scalar> WindowConfig<T> {
    pub fn new(length: usize, step: usize, criteria: SelectionCriteria<T>) -> Result<Self> {
        if length < 2 {
            return Err(Error::validation(format!(
                "window length ({length}) must be at least 2"
            )));
        }
        if step < 1 {
            return Err(Error::validation("window step must be at least 1"));
        }
        Ok(Self {
            length,
            step,
            criteria,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn criteria(&self) -> &SelectionCriteria<T> {
        &self.criteria
    }
}

impl<T: Scalar> Default for WindowConfig<T> {
    fn default() -> Self {
        Self {
            length: DEFAULT_WINDOW_LENGTH,
            step: DEFAULT_STEP,
            criteria: SelectionCriteria::default(),
        }
    }
}

/// Row ranges `[k·step, k·step + length)` for `k = 0 .. ⌊(T − length)/step⌋`.
pub fn window_schedule<T: Scalar>(rows: usize, cfg: &WindowConfig<T>) -> Result<Vec<Range<usize>>> {
    if rows < cfg.length {
        return Err(Error::InsufficientData {
            required: cfg.length,
            actual: rows,
        });
    }
    let count = (rows - cfg.length) / cfg.step + 1;
    Ok((0..count)
        .map(|k| k * cfg.step..k * cfg.step + cfg.length)
        .collect())
}

/// Which measures to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureSet {
    pub kmo: bool,
    pub pc1: bool,
    pub select: bool,
    pub dr: bool,
}

impl MeasureSet {
    pub const ALL: Self = Self {
        kmo: true,
        pc1: true,
        select: true,
        dr: true,
    };

    pub const NONE: Self = Self {
        kmo: false,
        pc1: false,
        select: false,
        dr: false,
    };

    /// Parses a measure name: `kmo`, `pc1`, `select` or `dr`.
    pub fn with(mut self, name: &str) -> Result<Self> {
        match name {
            "kmo" => self.kmo = true,
            "pc1" => self.pc1 = true,
            "select" => self.select = true,
            "dr" => self.dr = true,
            other => {
                return Err(Error::validation(format!(
                    "unknown measure {other:?} (expected kmo, pc1, select or dr)"
                )))
            }
        }
        Ok(self)
    }

    fn needs_correlation(&self) -> bool {
        self.kmo || self.pc1 || self.select
    }
}

impl Default for MeasureSet {
    fn default() -> Self {
        Self::ALL
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field<V> {
    Value(V),
    Failed(String),
    NotComputed,
}

impl<V: Copy> Field<V> {
    pub fn value(&self) -> Option<V> {
        match self {
            Field::Value(v) => Some(*v),
            _ => None,
        }
    }

    fn from_result(r: Result<V>) -> Self {
        match r {
            Ok(v) => Field::Value(v),
            Err(e) => Field::Failed(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow<T = f64> {
    pub window_end: NaiveDate,
    pub kmo: Field<T>,
    pub pc1_pct: Field<T>,
    pub n_selected: Field<usize>,
    pub dr: Field<T>,
    pub index_return: Field<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries<T = f64> {
    pub rows: Vec<MetricsRow<T>>,
}

/// `(V_end − V_start) / V_start` between two dates of the index.
pub fn index_window_return<T: Scalar>(
    index: &IndexSeries<T>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<T> {
    let level = |d: NaiveDate| {
        index.value_on(d).ok_or_else(|| Error::Coverage {
            date: d.format(DATE_FORMAT).to_string(),
        })
    };
    let (v0, v1) = (level(start)?, level(end)?);
    Ok((v1 - v0) / v0)
}

/// Computes the requested measures on one window.
pub fn run_window<T: Scalar>(
    window: &ReturnWindow<'_, T>,
    cfg: &WindowConfig<T>,
    measures: MeasureSet,
    index: Option<&IndexSeries<T>>,
) -> MetricsRow<T> {
    let mut row = MetricsRow {
        window_end: window.last_date(),
        kmo: Field::NotComputed,
        pc1_pct: Field::NotComputed,
        n_selected: Field::NotComputed,
        dr: Field::NotComputed,
        index_return: Field::NotComputed,
    };

    if measures.needs_correlation() {
        let corr_and_spectrum =
            correlation_matrix(window).and_then(|r| correlation_spectrum(&r).map(|s| (r, s)));
        match corr_and_spectrum {
            Ok((r, spectrum)) => {
                if measures.kmo {
                    row.kmo = Field::from_result(kmo(&r));
                }
                if measures.pc1 {
                    row.pc1_pct = Field::from_result(pc1_variance_explained(&spectrum, r.dim()));
                }
                if measures.select {
                    row.n_selected = Field::from_result(
                        select_stocks_from(&r, spectrum, cfg.criteria()).map(|s| s.retained.len()),
                    );
                }
            }
            Err(e) => {
                let msg = e.to_string();
                if measures.kmo {
                    row.kmo = Field::Failed(msg.clone());
                }
                if measures.pc1 {
                    row.pc1_pct = Field::Failed(msg.clone());
                }
                if measures.select {
                    row.n_selected = Field::Failed(msg);
                }
            }
        }
    }

    if measures.dr {
        row.dr = Field::from_result(covariance_matrix(window).and_then(|s| {
            let w = equal_weights(s.tickers())?;
            diversification_ratio(&w, &s)
        }));
    }

    if let Some(index) = index {
        row.index_return = Field::from_result(index_window_return(
            index,
            window.first_date(),
            window.last_date(),
        ));
    }
    row
}

/// Runs every scheduled window over a return panel; output is in schedule order.
pub fn run_returns<T: Scalar>(
    returns: &ReturnPanel<T>,
    cfg: &WindowConfig<T>,
    measures: MeasureSet,
    index: Option<&IndexSeries<T>>,
    parallel: bool,
) -> Result<MetricsSeries<T>> {
    let schedule = window_schedule(returns.n_rows(), cfg)?;
    let eval = |range: &Range<usize>| -> Result<MetricsRow<T>> {
        let window = returns.window(range.start, range.len())?;
        Ok(run_window(&window, cfg, measures, index))
    };
    let rows = if parallel {
        schedule.par_iter().map(eval).collect::<Result<Vec<_>>>()?
    } else {
        schedule.iter().map(eval).collect::<Result<Vec<_>>>()?
    };
    Ok(MetricsSeries { rows })
}

/// Total returns from a complete price panel, then [`run_returns`].
pub fn run_series<T: Scalar>(
    panel: &StockPanel<T>,
    cfg: &WindowConfig<T>,
    measures: MeasureSet,
    index: Option<&IndexSeries<T>>,
    parallel: bool,
) -> Result<MetricsSeries<T>> {
    let returns = simple_returns(panel)?;
    run_returns(&returns, cfg, measures, index, parallel)
}

fn cell<V: Copy>(f: &Field<V>, fmt: impl Fn(V) -> String) -> String {
    f.value().map(fmt).unwrap_or_default()
}

impl<T: Scalar> MetricsSeries<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `window_end,kmo,pc1_pct,n_selected,dr,index_return`; failed or skipped cells are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let wrap = |e: csv::Error| Error::io("writing metrics CSV", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER).map_err(wrap)?;
        for r in &self.rows {
            w.write_record([
                r.window_end.format(DATE_FORMAT).to_string(),
                cell(&r.kmo, format_sig17),
                cell(&r.pc1_pct, format_sig17),
                cell(&r.n_selected, |n| n.to_string()),
                cell(&r.dr, format_sig17),
                cell(&r.index_return, format_sig17),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("writing metrics CSV", e))
    }

    /// `window_end,field,error`, one line per failed cell.
    pub fn write_diagnostics_csv<W: Write>(&self, out: W) -> Result<()> {
        let wrap = |e: csv::Error| Error::io("writing diagnostics CSV", std::io::Error::other(e));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(DIAGNOSTICS_HEADER).map_err(wrap)?;
        for r in &self.rows {
            let date = r.window_end.format(DATE_FORMAT).to_string();
            let failures = [
                ("kmo", failure(&r.kmo)),
                ("pc1_pct", failure(&r.pc1_pct)),
                ("n_selected", failure(&r.n_selected)),
                ("dr", failure(&r.dr)),
                ("index_return", failure(&r.index_return)),
            ];
            for (name, msg) in failures {
                if let Some(msg) = msg {
                    w.write_record([date.as_str(), name, msg]).map_err(wrap)?;
                }
            }
        }
        w.flush()
            .map_err(|e| Error::io("writing diagnostics CSV", e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn diagnostics_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_diagnostics_csv(&mut buf)
            .expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}

fn failure<V>(f: &Field<V>) -> Option<&str> {
    match f {
        Field::Failed(m) => Some(m),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(length: usize, step: usize) -> WindowConfig<f64> {
        WindowConfig::new(length, step, SelectionCriteria::default()).unwrap()
    }

    #[test]
    fn schedule_counts() {
        assert_eq!(window_schedule(504, &cfg(504, 5)).unwrap(), vec![0..504]);
        assert_eq!(window_schedule(1000, &cfg(504, 5)).unwrap().len(), 100);
        let s = window_schedule(3509, &cfg(504, 5)).unwrap();
        assert_eq!(s.len(), 602);
        assert_eq!(s.last().unwrap().end, 3509);
        assert!(matches!(
            window_schedule(503, &cfg(504, 5)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(WindowConfig::new(1, 5, SelectionCriteria::<f64>::default()).is_err());
        assert!(WindowConfig::new(10, 0, SelectionCriteria::<f64>::default()).is_err());
        let d = WindowConfig::<f64>::default();
        assert_eq!((d.length(), d.step()), (504, 5));
    }

    #[test]
    fn measure_names() {
        let m = MeasureSet::NONE.with("dr").unwrap().with("kmo").unwrap();
        assert!(m.dr && m.kmo && !m.pc1 && !m.select);
        assert!(MeasureSet::NONE.with("sharpe").is_err());
    }

    #[test]
    fn index_returns() {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let d1 = NaiveDate::from_ymd_opt(2020, 6, 1).unwrap();
        let flat = IndexSeries::new(vec![d0, d1], vec![100.0, 100.0]).unwrap();
        assert_eq!(index_window_return(&flat, d0, d1).unwrap(), 0.0);
        let up = IndexSeries::<f64>::new(vec![d0, d1], vec![100.0, 120.0]).unwrap();
        assert!((index_window_return(&up, d0, d1).unwrap() - 0.2).abs() < 1e-15);
        let missing = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        assert!(matches!(
            index_window_return(&up, d0, missing),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let series = MetricsSeries {
            rows: vec![MetricsRow {
                window_end: NaiveDate::from_ymd_opt(2020, 1, 31).unwrap(),
                kmo: Field::Failed("statistic undefined: 0/0".into()),
                pc1_pct: Field::Value(64.0),
                n_selected: Field::Value(7),
                dr: Field::Value(2.0),
                index_return: Field::NotComputed,
            }],
        };
        assert_eq!(
            series.to_csv_string(),
            "window_end,kmo,pc1_pct,n_selected,dr,index_return\n\
             2020-01-31,,6.4000000000000000e1,7,2.0000000000000000e0,\n"
        );
        assert_eq!(
            series.diagnostics_csv_string(),
            "window_end,field,error\n2020-01-31,kmo,statistic undefined: 0/0\n"
        );
    }
}
