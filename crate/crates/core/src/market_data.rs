//! Price/dividend ingestion and dividend-adjusted total returns.
//!
//! Prices and dividends arrive as long-format CSV (`date,ticker,value`) and are
//! pivoted into a date × ticker [`StockPanel`]. Returns are computed from the
//! dividend-adjusted price
//!
//! ```text
//! daily(t)      = 1 + D(t) / P(t)     (1 on days without a dividend)
//! cumulative(t) = daily(1) · … · daily(t)
//! PNEW(t)       = P(t) · cumulative(t)
//! R(t)          = (PNEW(t+1) − PNEW(t)) / PNEW(t)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Aligned date × ticker grid of closing prices and cash dividends.
#[derive(Debug, Clone, PartialEq)]
pub struct StockPanel<T = f64> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    close: Vec<Option<T>>,
    dividend: Vec<T>,
}

impl<T: Scalar> StockPanel<T> {
    /// Builds a panel from row-major (date-major) grids, validating every invariant.
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        close: Vec<Option<T>>,
        dividend: Vec<T>,
    ) -> Result<Self> {
        let cells = dates.len() * tickers.len();
        if close.len() != cells || dividend.len() != cells {
            return Err(Error::validation(format!(
                "panel grids must have {} cells ({} dates x {} tickers)",
                cells,
                dates.len(),
                tickers.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let unique: BTreeSet<&String> = tickers.iter().collect();
        if unique.len() != tickers.len() {
            return Err(Error::validation("duplicate ticker in panel"));
        }
        let p = tickers.len();
        for (cell, (c, d)) in close.iter().zip(&dividend).enumerate() {
            let (t, i) = (cell / p.max(1), cell % p.max(1));
            if let Some(c) = c {
                if !(*c > T::zero()) || !c.is_finite() {
                    return Err(Error::validation(format!(
                        "close price {} for {} on {} must be positive",
                        c, tickers[i], dates[t]
                    )));
                }
            }
            if !(*d >= T::zero()) || !d.is_finite() {
                return Err(Error::validation(format!(
                    "dividend {} for {} on {} must be non-negative",
                    d, tickers[i], dates[t]
                )));
            }
            if *d > T::zero() && c.is_none() {
                return Err(Error::validation(format!(
                    "dividend for {} on {} has no matching close price",
                    tickers[i], dates[t]
                )));
            }
        }
        Ok(Self {
            dates,
            tickers,
            close,
            dividend,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn close(&self, t: usize, i: usize) -> Option<T> {
        self.close[t * self.tickers.len() + i]
    }

    pub fn dividend(&self, t: usize, i: usize) -> T {
        self.dividend[t * self.tickers.len() + i]
    }

    pub fn ticker_index(&self, ticker: &str) -> Result<usize> {
        self.tickers
            .iter()
            .position(|t| t == ticker)
            .ok_or_else(|| Error::validation(format!("unknown ticker {ticker}")))
    }

    /// Sub-panel on a contiguous date range and an arbitrary ticker subset.
    fn restrict(&self, date_range: std::ops::Range<usize>, ticker_idx: &[usize]) -> Self {
        let mut close = Vec::with_capacity(date_range.len() * ticker_idx.len());
        let mut dividend = Vec::with_capacity(close.capacity());
        for t in date_range.clone() {
            for &i in ticker_idx {
                close.push(self.close(t, i));
                dividend.push(self.dividend(t, i));
            }
        }
        Self {
            dates: self.dates[date_range].to_vec(),
            tickers: ticker_idx
                .iter()
                .map(|&i| self.tickers[i].clone())
                .collect(),
            close,
            dividend,
        }
    }

    /// Same panel with columns in the given ticker order (must be a permutation).
    pub fn reorder_tickers(&self, order: &[&str]) -> Result<Self> {
        let idx = order
            .iter()
            .map(|t| self.ticker_index(t))
            .collect::<Result<Vec<_>>>()?;
        let unique: BTreeSet<usize> = idx.iter().copied().collect();
        if unique.len() != self.tickers.len() || idx.len() != self.tickers.len() {
            return Err(Error::validation("ticker order must be a permutation"));
        }
        Ok(self.restrict(0..self.dates.len(), &idx))
    }
}

/// Date × ticker grid of simple total returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T = f64> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<T>,
}

impl<T: Scalar> ReturnPanel<T> {
    /// `values` is date-major: `values[t * tickers.len() + i]`.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, values: Vec<T>) -> Result<Self> {
        if values.len() != dates.len() * tickers.len() {
            return Err(Error::validation(format!(
                "return grid has {} cells, expected {}x{}",
                values.len(),
                dates.len(),
                tickers.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > -T::one()) || !v.is_finite()) {
            return Err(Error::validation(format!(
                "return {v} is not a finite value above -1"
            )));
        }
        Ok(Self {
            dates,
            tickers,
            values,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, t: usize, i: usize) -> T {
        self.values[t * self.tickers.len() + i]
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        (0..self.n_rows()).map(|t| self.get(t, i)).collect()
    }

    /// Borrowed view of `len` consecutive rows starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> Result<ReturnWindow<'_, T>> {
        if start + len > self.n_rows() || len == 0 {
            return Err(Error::InsufficientData {
                required: start + len.max(1),
                actual: self.n_rows(),
            });
        }
        Ok(ReturnWindow {
            panel: self,
            start,
            len,
        })
    }

    pub fn full_window(&self) -> ReturnWindow<'_, T> {
        ReturnWindow {
            panel: self,
            start: 0,
            len: self.n_rows(),
        }
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.n_rows() * idx.len());
        for t in 0..self.n_rows() {
            values.extend(idx.iter().map(|&i| self.get(t, i)));
        }
        Self {
            dates: self.dates.clone(),
            tickers: idx.iter().map(|&i| self.tickers[i].clone()).collect(),
            values,
        }
    }
}

/// Contiguous row range of a [`ReturnPanel`].
#[derive(Debug, Clone, Copy)]
pub struct ReturnWindow<'a, T> {
    panel: &'a ReturnPanel<T>,
    start: usize,
    len: usize,
}

impl<'a, T: Scalar> ReturnWindow<'a, T> {
    pub fn rows(&self) -> usize {
        self.len
    }

    pub fn cols(&self) -> usize {
        self.panel.n_cols()
    }

    pub fn get(&self, t: usize, i: usize) -> T {
        self.panel.get(self.start + t, i)
    }

    pub fn column(&self, i: usize) -> Vec<T> {
        (0..self.len).map(|t| self.get(t, i)).collect()
    }

    pub fn tickers(&self) -> &'a [String] {
        self.panel.tickers()
    }

    pub fn dates(&self) -> &'a [NaiveDate] {
        &self.panel.dates()[self.start..self.start + self.len]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn first_date(&self) -> NaiveDate {
        self.panel.dates()[self.start]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.panel.dates()[self.start + self.len - 1]
    }
}

/// Market index levels.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries<T = f64> {
    dates: Vec<NaiveDate>,
    values: Vec<T>,
}

impl<T: Scalar> IndexSeries<T> {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<T>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::validation("index dates and values differ in length"));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "index dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v > T::zero()) || !v.is_finite()) {
            return Err(Error::validation(format!(
                "index value {v} must be positive"
            )));
        }
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value_on(&self, date: NaiveDate) -> Option<T> {
        self.dates.binary_search(&date).ok().map(|k| self.values[k])
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|e| format!("invalid date {s:?}: {e}"))
}

fn parse_value<T: Scalar>(s: &str) -> std::result::Result<T, String> {
    let x: f64 = s.parse().map_err(|_| format!("invalid number {s:?}"))?;
    if !x.is_finite() {
        return Err(format!("non-finite number {s:?}"));
    }
    T::from_f64(x).ok_or_else(|| format!("number {s:?} not representable"))
}

/// One parsed long-format row.
struct LongRow<T> {
    line: u64,
    date: NaiveDate,
    ticker: String,
    value: T,
}

fn read_long_csv<T: Scalar, R: Read>(
    source: R,
    source_name: &str,
    value_column: &str,
) -> Result<Vec<LongRow<T>>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let expected = ["date", "ticker", value_column];
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(parse_err(
            1,
            format!(
                "expected header {:?}, got {:?}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row_text = record.iter().collect::<Vec<_>>().join(",");
        let date = parse_date(&record[0])
            .map_err(|m| parse_err(line, format!("{m} in row {row_text:?}")))?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(parse_err(line, format!("empty ticker in row {row_text:?}")));
        }
        let value = parse_value(&record[2])
            .map_err(|m| parse_err(line, format!("{m} in row {row_text:?}")))?;
        rows.push(LongRow {
            line,
            date,
            ticker,
            value,
        });
    }
    Ok(rows)
}

/// Reads `date,ticker,close` and `date,ticker,amount` CSV streams into a panel.
///
/// Tickers are sorted lexicographically; dates are the sorted union of both
/// files. Duplicate dividend rows for a (date, ticker) are summed.
pub fn load_panel<T: Scalar, P: Read, D: Read>(prices: P, dividends: D) -> Result<StockPanel<T>> {
    load_panel_named(prices, "prices", dividends, "dividends")
}

pub fn load_panel_named<T: Scalar, P: Read, D: Read>(
    prices: P,
    prices_name: &str,
    dividends: D,
    dividends_name: &str,
) -> Result<StockPanel<T>> {
    let price_rows = read_long_csv::<T, _>(prices, prices_name, "close")?;
    let dividend_rows = read_long_csv::<T, _>(dividends, dividends_name, "amount")?;

    for r in &price_rows {
        if !(r.value > T::zero()) {
            return Err(Error::validation(format!(
                "{prices_name}: line {}: close {} for {} on {} must be positive",
                r.line, r.value, r.ticker, r.date
            )));
        }
    }
    for r in &dividend_rows {
        if r.value < T::zero() {
            return Err(Error::validation(format!(
                "{dividends_name}: line {}: dividend {} for {} on {} must be non-negative",
                r.line, r.value, r.ticker, r.date
            )));
        }
    }

    let tickers: Vec<String> = price_rows
        .iter()
        .chain(&dividend_rows)
        .map(|r| r.ticker.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let dates: Vec<NaiveDate> = price_rows
        .iter()
        .chain(&dividend_rows)
        .map(|r| r.date)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ticker_pos: BTreeMap<&str, usize> = tickers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let date_pos: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();

    let p = tickers.len();
    let mut close = vec![None; dates.len() * p];
    let mut dividend = vec![T::zero(); dates.len() * p];
    for r in &price_rows {
        let cell = date_pos[&r.date] * p + ticker_pos[r.ticker.as_str()];
        if close[cell].is_some() {
            return Err(Error::validation(format!(
                "{prices_name}: line {}: duplicate price for {} on {}",
                r.line, r.ticker, r.date
            )));
        }
        close[cell] = Some(r.value);
    }
    for r in &dividend_rows {
        let cell = date_pos[&r.date] * p + ticker_pos[r.ticker.as_str()];
        if close[cell].is_none() {
            return Err(Error::validation(format!(
                "{dividends_name}: line {}: dividend for {} on {} has no matching close price",
                r.line, r.ticker, r.date
            )));
        }
        dividend[cell] += r.value;
    }
    StockPanel::new(dates, tickers, close, dividend)
}

/// Opens and loads a price/dividend file pair.
pub fn load_panel_files<T: Scalar>(prices: &Path, dividends: &Path) -> Result<StockPanel<T>> {
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|e| Error::io(format!("cannot open {}", p.display()), e))
    };
    load_panel_named(
        open(prices)?,
        &prices.display().to_string(),
        open(dividends)?,
        &dividends.display().to_string(),
    )
}

/// Reads a `date,value` index CSV.
pub fn load_index<T: Scalar, R: Read>(source: R, source_name: &str) -> Result<IndexSeries<T>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["date", "value"] {
        return Err(parse_err(1, "expected header \"date,value\"".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0]).map_err(|m| parse_err(line, m))?;
        let value: T = parse_value(&record[1]).map_err(|m| parse_err(line, m))?;
        rows.push((date, value));
    }
    rows.sort_by_key(|r| r.0);
    let (dates, values) = rows.into_iter().unzip();
    IndexSeries::new(dates, values)
}

/// Daily and cumulative dividend factors for one ticker.
pub fn dividend_factors<T: Scalar>(
    panel: &StockPanel<T>,
    ticker: &str,
) -> Result<(Vec<T>, Vec<T>)> {
    let i = panel.ticker_index(ticker)?;
    let n = panel.dates().len();
    let mut daily = Vec::with_capacity(n);
    let mut cumulative = Vec::with_capacity(n);
    let mut running = T::one();
    for t in 0..n {
        let d = panel.dividend(t, i);
        let factor = if d > T::zero() {
            let p = panel.close(t, i).ok_or_else(|| {
                Error::validation(format!(
                    "dividend for {} on {} has no matching close price",
                    ticker,
                    panel.dates()[t]
                ))
            })?;
            T::one() + d / p
        } else {
            T::one()
        };
        running *= factor;
        daily.push(factor);
        cumulative.push(running);
    }
    Ok((daily, cumulative))
}

/// Dividend-adjusted prices `P(t) · cumulative(t)`; absent prices stay absent.
pub fn adjust_prices<T: Scalar>(panel: &StockPanel<T>, ticker: &str) -> Result<Vec<Option<T>>> {
    let i = panel.ticker_index(ticker)?;
    let (_, cumulative) = dividend_factors(panel, ticker)?;
    Ok((0..panel.dates().len())
        .map(|t| panel.close(t, i).map(|p| p * cumulative[t]))
        .collect())
}

/// Simple total returns; the return dated `t` spans prices `t` and `t+1`.
pub fn simple_returns<T: Scalar>(panel: &StockPanel<T>) -> Result<ReturnPanel<T>> {
    let n = panel.dates().len();
    if n < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: n,
        });
    }
    let p = panel.tickers().len();
    let mut adjusted = Vec::with_capacity(p);
    for (i, ticker) in panel.tickers().iter().enumerate() {
        let series = adjust_prices(panel, ticker)?;
        let series = series
            .into_iter()
            .enumerate()
            .map(|(t, v)| {
                v.ok_or_else(|| Error::IncompleteData {
                    ticker: panel.tickers()[i].clone(),
                    date: panel.dates()[t].to_string(),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        adjusted.push(series);
    }
    let mut values = Vec::with_capacity((n - 1) * p);
    for t in 0..n - 1 {
        for series in &adjusted {
            values.push((series[t + 1] - series[t]) / series[t]);
        }
    }
    ReturnPanel::new(
        panel.dates()[..n - 1].to_vec(),
        panel.tickers().to_vec(),
        values,
    )
}

/// Restricts to `[start, end]` and keeps only tickers priced on every date there.
pub fn complete_universe<T: Scalar>(
    panel: &StockPanel<T>,
    start: NaiveDate,
    end: NaiveDate,
) -> Result<StockPanel<T>> {
    let dates = panel.dates();
    if start >= end {
        return Err(Error::validation(format!(
            "start {start} must precede end {end}"
        )));
    }
    match (dates.first(), dates.last()) {
        (Some(&first), Some(&last)) if start >= first && end <= last => {}
        _ => {
            return Err(Error::validation(format!(
                "range {start}..{end} is outside the panel's dates"
            )))
        }
    }
    let lo = dates.partition_point(|d| *d < start);
    let hi = dates.partition_point(|d| *d <= end);
    let keep: Vec<usize> = (0..panel.tickers().len())
        .filter(|&i| (lo..hi).all(|t| panel.close(t, i).is_some()))
        .collect();
    if keep.is_empty() || lo == hi {
        return Err(Error::EmptyUniverse {
            start: start.to_string(),
            end: end.to_string(),
        });
    }
    Ok(panel.restrict(lo..hi, &keep))
}

/// `complete_universe` over the panel's full date span.
pub fn complete_universe_full<T: Scalar>(panel: &StockPanel<T>) -> Result<StockPanel<T>> {
    match (panel.dates().first(), panel.dates().last()) {
        (Some(&a), Some(&b)) if a < b => complete_universe(panel, a, b),
        _ => Err(Error::InsufficientData {
            required: 2,
            actual: panel.dates().len(),
        }),
    }
}

/// Writes a panel back out as a `date,ticker,close` / `date,ticker,amount` pair.
/// Values use 17 significant digits so a reload reproduces them exactly.
pub fn write_panel_csv<T: Scalar, P: Write, D: Write>(
    panel: &StockPanel<T>,
    prices: P,
    dividends: D,
) -> Result<()> {
    let wrap = |e: csv::Error| Error::io("writing panel CSV", std::io::Error::other(e));
    let mut pw = csv::Writer::from_writer(prices);
    let mut dw = csv::Writer::from_writer(dividends);
    pw.write_record(["date", "ticker", "close"]).map_err(wrap)?;
    dw.write_record(["date", "ticker", "amount"])
        .map_err(wrap)?;
    for (t, date) in panel.dates().iter().enumerate() {
        let date = date.format(DATE_FORMAT).to_string();
        for (i, ticker) in panel.tickers().iter().enumerate() {
            if let Some(c) = panel.close(t, i) {
                pw.write_record([date.as_str(), ticker, &crate::format_sig17(c)])
                    .map_err(wrap)?;
            }
            let d = panel.dividend(t, i);
            if d > T::zero() {
                dw.write_record([date.as_str(), ticker, &crate::format_sig17(d)])
                    .map_err(wrap)?;
            }
        }
    }
    pw.flush().map_err(|e| Error::io("writing prices", e))?;
    dw.flush().map_err(|e| Error::io("writing dividends", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, DATE_FORMAT).unwrap()
    }

    fn load(prices: &str, dividends: &str) -> Result<StockPanel<f64>> {
        load_panel(prices.as_bytes(), dividends.as_bytes())
    }

    const NO_DIVS: &str = "date,ticker,amount\n";

    #[test]
    fn two_tickers_three_dates_no_dividends() {
        let prices = "date,ticker,close\n\
            2020-01-01,A,10\n2020-01-02,A,11\n2020-01-03,A,12\n\
            2020-01-01,B,20\n2020-01-02,B,21\n2020-01-03,B,22\n";
        let panel = load(prices, NO_DIVS).unwrap();
        assert_eq!(panel.dates().len(), 3);
        assert_eq!(panel.tickers(), ["A", "B"]);
        for t in 0..3 {
            for i in 0..2 {
                assert_eq!(panel.dividend(t, i), 0.0);
            }
        }
        assert_eq!(panel.close(2, 1), Some(22.0));
    }

    #[test]
    fn duplicate_dividend_rows_are_summed() {
        let prices = "date,ticker,close\n2020-01-01,A,10\n2020-01-02,A,11\n";
        let divs = "date,ticker,amount\n2020-01-02,A,0.5\n2020-01-02,A,0.5\n";
        let panel = load(prices, divs).unwrap();
        assert_eq!(panel.dividend(1, 0), 0.5 + 0.5);
    }

    #[test]
    fn invalid_date_names_the_row() {
        let prices = "date,ticker,close\n2001-01-01,A,10\n2001-13-01,A,10\n";
        match load(prices, NO_DIVS) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("2001-13-01,A,10"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_positive_close_is_rejected() {
        let prices = "date,ticker,close\n2001-01-01,A,0\n";
        assert!(matches!(load(prices, NO_DIVS), Err(Error::Validation(_))));
    }

    #[test]
    fn dividend_without_price_is_rejected() {
        let prices = "date,ticker,close\n2001-01-01,A,10\n2001-01-02,B,10\n";
        let divs = "date,ticker,amount\n2001-01-02,A,1\n";
        assert!(matches!(load(prices, divs), Err(Error::Validation(_))));
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        let prices = "day,ticker,close\n2001-01-01,A,10\n";
        assert!(matches!(
            load(prices, NO_DIVS),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    fn single(prices: &[f64], divs: &[f64]) -> StockPanel<f64> {
        let dates = (0..prices.len())
            .map(|k| d("2020-01-01") + chrono::Days::new(k as u64))
            .collect();
        StockPanel::new(
            dates,
            vec!["A".into()],
            prices.iter().map(|&p| Some(p)).collect(),
            divs.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn factors_are_identity_without_dividends() {
        let panel = single(&[10.0, 11.0, 12.0], &[0.0, 0.0, 0.0]);
        let (daily, cum) = dividend_factors(&panel, "A").unwrap();
        assert_eq!(daily, vec![1.0; 3]);
        assert_eq!(cum, vec![1.0; 3]);
    }

    #[test]
    fn factor_on_dividend_day() {
        let panel = single(&[100.0, 101.0, 101.0], &[0.0, 1.0, 0.0]);
        let (daily, cum) = dividend_factors(&panel, "A").unwrap();
        assert_eq!(daily, vec![1.0, 1.0 + 1.0 / 101.0, 1.0]);
        let expected = 102.0 / 101.0;
        assert!((cum[1] - expected).abs() < 1e-15);
        assert!((cum[2] - expected).abs() < 1e-15);
    }

    #[test]
    fn successive_dividends_multiply() {
        let panel = single(&[50.0, 40.0, 20.0], &[0.0, 2.0, 3.0]);
        let (_, cum) = dividend_factors(&panel, "A").unwrap();
        let direct = (1.0 + 2.0 / 40.0) * (1.0 + 3.0 / 20.0);
        assert!((cum[2] - direct).abs() < 1e-15);
    }

    #[test]
    fn adjusted_prices() {
        let panel = single(&[100.0, 101.0], &[0.0, 1.0]);
        let adj = adjust_prices(&panel, "A").unwrap();
        assert_eq!(adj[0], Some(100.0));
        assert!((adj[1].unwrap() - 102.0).abs() < 1e-12);

        let plain = single(&[100.0, 90.0], &[0.0, 0.0]);
        assert_eq!(
            adjust_prices(&plain, "A").unwrap(),
            vec![Some(100.0), Some(90.0)]
        );

        let one = single(&[42.0], &[0.0]);
        assert_eq!(adjust_prices(&one, "A").unwrap(), vec![Some(42.0)]);
    }

    #[test]
    fn returns_from_adjusted_prices() {
        let r = simple_returns(&single(&[100.0, 102.0], &[0.0, 0.0])).unwrap();
        assert_eq!(r.column(0), vec![0.02]);

        let r = simple_returns(&single(&[100.0, 101.0], &[0.0, 1.0])).unwrap();
        assert!((r.get(0, 0) - 0.02).abs() < 1e-12);

        let r = simple_returns(&single(&[7.0, 7.0, 7.0], &[0.0; 3])).unwrap();
        assert_eq!(r.column(0), vec![0.0, 0.0]);
        assert_eq!(r.dates(), &[d("2020-01-01"), d("2020-01-02")]);
    }

    #[test]
    fn returns_need_complete_prices() {
        let prices = "date,ticker,close\n2020-01-01,A,1\n2020-01-02,A,1\n2020-01-01,B,1\n";
        let panel = load(prices, NO_DIVS).unwrap();
        match simple_returns(&panel) {
            Err(Error::IncompleteData { ticker, date }) => {
                assert_eq!(ticker, "B");
                assert_eq!(date, "2020-01-02");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            simple_returns(&single(&[1.0], &[0.0])),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn gappy_panel() -> StockPanel<f64> {
        let prices = "date,ticker,close\n\
            2020-01-01,A,1\n2020-01-02,A,1\n2020-01-03,A,1\n2020-01-04,A,1\n\
            2020-01-01,B,1\n2020-01-03,B,1\n2020-01-04,B,1\n\
            2020-01-03,C,1\n2020-01-04,C,1\n\
            2020-01-01,D,1\n2020-01-02,D,1\n2020-01-03,D,1\n2020-01-04,D,1\n";
        load(prices, NO_DIVS).unwrap()
    }

    #[test]
    fn complete_universe_drops_gappy_and_late_tickers() {
        let panel = gappy_panel();
        let u = complete_universe(&panel, d("2020-01-01"), d("2020-01-04")).unwrap();
        assert_eq!(u.tickers(), ["A", "D"]);
        assert_eq!(u.dates().len(), 4);

        let late = complete_universe(&panel, d("2020-01-03"), d("2020-01-04")).unwrap();
        assert_eq!(late.tickers(), ["A", "B", "C", "D"]);
        assert_eq!(
            late,
            complete_universe(&late, d("2020-01-03"), d("2020-01-04")).unwrap()
        );
    }

    #[test]
    fn complete_universe_errors() {
        let panel = gappy_panel();
        assert!(complete_universe(&panel, d("2020-01-04"), d("2020-01-01")).is_err());
        assert!(complete_universe(&panel, d("2019-12-01"), d("2020-01-04")).is_err());
        let sparse = load(
            "date,ticker,close\n2020-01-01,A,1\n2020-01-02,B,1\n",
            NO_DIVS,
        )
        .unwrap();
        assert!(matches!(
            complete_universe(&sparse, d("2020-01-01"), d("2020-01-02")),
            Err(Error::EmptyUniverse { .. })
        ));
    }

    #[test]
    fn panel_csv_roundtrip_is_exact() {
        let panel = single(
            &[100.0, 101.12345678901234, 99.5],
            &[0.0, 0.3333333333333333, 0.0],
        );
        let (mut p, mut dv) = (Vec::new(), Vec::new());
        write_panel_csv(&panel, &mut p, &mut dv).unwrap();
        let back: StockPanel<f64> = load_panel(p.as_slice(), dv.as_slice()).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn index_loading() {
        let idx: IndexSeries<f64> = load_index(
            "date,value\n2020-01-02,110\n2020-01-01,100\n".as_bytes(),
            "index",
        )
        .unwrap();
        assert_eq!(idx.value_on(d("2020-01-01")), Some(100.0));
        assert_eq!(idx.value_on(d("2020-01-03")), None);
        assert!(load_index::<f64, _>("date,value\n2020-01-01,-1\n".as_bytes(), "index").is_err());
    }
}
