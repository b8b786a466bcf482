//! Sample correlation/covariance matrices, anti-image partial correlations and
//! the Kaiser-Meyer-Olkin sampling-adequacy statistic.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::market_data::ReturnWindow;
use crate::scalar::Scalar;

/// Reciprocal condition estimate below which a correlation matrix is treated as singular.
pub const MIN_RCOND: f64 = 1e-12;

/// Pearson correlation matrix with exact unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T = f64> {
    tickers: Vec<String>,
    values: Matrix<T>,
}

/// Sample covariance matrix (divisor n − 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T = f64> {
    tickers: Vec<String>,
    values: Matrix<T>,
}

/// Anti-image partial correlations `q_jk = −a_jk / √(a_jj a_kk)` with `A = R⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrelationMatrix<T = f64> {
    tickers: Vec<String>,
    values: Matrix<T>,
}

fn check_labels(tickers: &[String], m: &Matrix<impl Scalar>) -> Result<()> {
    if !m.is_square() || m.rows() != tickers.len() {
        return Err(Error::validation(format!(
            "{} tickers for a {}x{} matrix",
            tickers.len(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl<T: Scalar> CorrelationMatrix<T> {
    /// Validates symmetry, unit diagonal and `|r| ≤ 1` (each within 1e-12).
    /// Entries marginally outside `[−1, 1]` are clamped.
    pub fn new(tickers: Vec<String>, mut values: Matrix<T>) -> Result<Self> {
        check_labels(&tickers, &values)?;
        let tol = T::tol(1e-12);
        values.check_symmetric(tol)?;
        let p = values.rows();
        for i in 0..p {
            if (values[(i, i)] - T::one()).abs() > tol {
                return Err(Error::validation(format!(
                    "correlation diagonal entry {} is {}, not 1",
                    i,
                    values[(i, i)]
                )));
            }
            values[(i, i)] = T::one();
            for j in 0..p {
                let r = values[(i, j)];
                if !(r.abs() <= T::one() + tol) {
                    return Err(Error::validation(format!(
                        "correlation entry ({i},{j}) = {r} outside [-1, 1]"
                    )));
                }
                values[(i, j)] = r.max(-T::one()).min(T::one());
            }
        }
        Ok(Self { tickers, values })
    }

    /// Equicorrelated matrix with off-diagonal `rho`.
    pub fn equicorrelated(tickers: Vec<String>, rho: T) -> Result<Self> {
        let p = tickers.len();
        let values = Matrix::from_fn(p, p, |i, j| if i == j { T::one() } else { rho });
        Self::new(tickers, values)
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.tickers.len()
    }

    /// Principal sub-matrix on the given indices, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        Self {
            tickers: idx.iter().map(|&i| self.tickers[i].clone()).collect(),
            values: self.values.select(idx, idx),
        }
    }
}

impl<T: Scalar> CovarianceMatrix<T> {
    /// Validates symmetry (1e-12) and a non-negative diagonal.
    pub fn new(tickers: Vec<String>, values: Matrix<T>) -> Result<Self> {
        check_labels(&tickers, &values)?;
        values.check_symmetric(T::tol(1e-12))?;
        if let Some((i, v)) = values
            .diagonal()
            .into_iter()
            .enumerate()
            .find(|(_, v)| !(*v >= T::zero()))
        {
            return Err(Error::validation(format!(
                "variance of {} is negative ({v})",
                tickers[i]
            )));
        }
        Ok(Self { tickers, values })
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            tickers: self.tickers.clone(),
            values: self.values.scaled(c),
        }
    }
}

impl<T: Scalar> PartialCorrelationMatrix<T> {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }
}

/// Column means and centered columns. Constant columns center to exact zeros.
fn centered_columns<T: Scalar>(window: &ReturnWindow<'_, T>) -> Vec<Vec<T>> {
    let n = T::from_usize(window.rows()).expect("row count fits scalar");
    (0..window.cols())
        .map(|i| {
            let col = window.column(i);
            if col.iter().all(|&x| x == col[0]) {
                return vec![T::zero(); col.len()];
            }
            let mean = col.iter().copied().sum::<T>() / n;
            col.into_iter().map(|x| x - mean).collect()
        })
        .collect()
}

fn check_window_shape<T: Scalar>(window: &ReturnWindow<'_, T>) -> Result<()> {
    if window.rows() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: window.rows(),
        });
    }
    if window.cols() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 tickers, got {}",
            window.cols()
        )));
    }
    Ok(())
}

fn sample_covariance<T: Scalar>(centered: &[Vec<T>]) -> Matrix<T> {
    let p = centered.len();
    let n = centered.first().map_or(0, Vec::len);
    let dof = T::from_usize(n - 1).expect("row count fits scalar");
    let mut cov = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let s: T = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(&a, &b)| a * b)
                .sum();
            cov[(i, j)] = s / dof;
            cov[(j, i)] = s / dof;
        }
    }
    cov
}

/// Sample covariance with divisor `n − 1`.
pub fn covariance_matrix<T: Scalar>(window: &ReturnWindow<'_, T>) -> Result<CovarianceMatrix<T>> {
    check_window_shape(window)?;
    let cov = sample_covariance(&centered_columns(window));
    CovarianceMatrix::new(window.tickers().to_vec(), cov)
}

/// Pearson correlation matrix; fails on any zero-variance column.
pub fn correlation_matrix<T: Scalar>(window: &ReturnWindow<'_, T>) -> Result<CorrelationMatrix<T>> {
    check_window_shape(window)?;
    let centered = centered_columns(window);
    for (i, col) in centered.iter().enumerate() {
        let scale = window
            .column(i)
            .iter()
            .fold(T::zero(), |m, x| m.max(x.abs()));
        let ss: T = col.iter().map(|&x| x * x).sum();
        let floor = T::epsilon() * scale;
        if ss <= floor * floor * T::from_usize(col.len()).unwrap() {
            return Err(Error::DegenerateColumn {
                ticker: window.tickers()[i].clone(),
            });
        }
    }
    let cov = sample_covariance(&centered);
    let sd: Vec<T> = cov.diagonal().into_iter().map(T::sqrt).collect();
    let p = sd.len();
    let values = Matrix::from_fn(p, p, |i, j| {
        if i == j {
            T::one()
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            (cov[(a, b)] / (sd[a] * sd[b])).max(-T::one()).min(T::one())
        }
    });
    CorrelationMatrix::new(window.tickers().to_vec(), values)
}

/// Anti-image partial correlations from the inverse correlation matrix.
pub fn partial_correlations<T: Scalar>(
    r: &CorrelationMatrix<T>,
) -> Result<PartialCorrelationMatrix<T>> {
    let (inv, _rcond) = r.values().spd_inverse(T::tol(MIN_RCOND))?;
    let p = r.dim();
    let d: Vec<T> = inv.diagonal().into_iter().map(T::sqrt).collect();
    let values = Matrix::from_fn(p, p, |i, j| {
        if i == j {
            T::one()
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            -inv[(a, b)] / (d[a] * d[b])
        }
    });
    Ok(PartialCorrelationMatrix {
        tickers: r.tickers().to_vec(),
        values,
    })
}

/// Kaiser-Meyer-Olkin statistic `Σr² / (Σr² + Σq²)` over off-diagonal pairs.
pub fn kmo<T: Scalar>(r: &CorrelationMatrix<T>) -> Result<T> {
    let p = r.dim();
    let mut r2 = T::zero();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                r2 += r.values()[(i, j)].powi(2);
            }
        }
    }
    // Off-diagonal mass at rounding level counts as zero.
    let pairs = T::from_usize(p * p.saturating_sub(1)).expect("count fits scalar");
    if r2 <= pairs * T::epsilon() * T::epsilon() {
        return Err(Error::UndefinedStatistic(
            "KMO is 0/0 when every off-diagonal correlation is zero".into(),
        ));
    }
    let q = partial_correlations(r)?;
    let mut q2 = T::zero();
    for i in 0..p {
        for j in 0..p {
            if i != j {
                q2 += q.values()[(i, j)].powi(2);
            }
        }
    }
    Ok(r2 / (r2 + q2))
}

/// Writes a labelled square matrix: header `,T1,T2,…`, then one `Ti,v…` row per ticker.
pub fn write_square_csv<T: Scalar, W: Write>(
    tickers: &[String],
    m: &Matrix<T>,
    out: W,
) -> Result<()> {
    let wrap = |e: csv::Error| Error::io("writing matrix CSV", std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(tickers.iter().cloned());
    w.write_record(&header).map_err(wrap)?;
    for (i, t) in tickers.iter().enumerate() {
        let mut row = vec![t.clone()];
        row.extend(m.row(i).iter().map(|&x| crate::format_sig17(x)));
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("writing matrix CSV", e))
}

/// Inverse of [`write_square_csv`].
pub fn read_square_csv<T: Scalar, R: BufRead>(input: R) -> Result<(Vec<String>, Matrix<T>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut records = reader.records();
    let parse_err = |line: u64, message: String| Error::Parse {
        source_name: "matrix".into(),
        line,
        message,
    };
    let header = records
        .next()
        .ok_or_else(|| parse_err(1, "empty matrix file".into()))?
        .map_err(|e| parse_err(1, e.to_string()))?;
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in records.enumerate() {
        let line = k as u64 + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.get(0) != tickers.get(k).map(String::as_str) {
            return Err(parse_err(line, "row label does not match header".into()));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .and_then(T::from_f64)
                    .ok_or_else(|| parse_err(line, format!("invalid number {s:?}")))
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    let m = Matrix::from_rows(&rows)?;
    check_labels(&tickers, &m)?;
    Ok((tickers, m))
}

impl<T: Scalar> CorrelationMatrix<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_square_csv(&self.tickers, &self.values, out)
    }
}

impl<T: Scalar> CovarianceMatrix<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_square_csv(&self.tickers, &self.values, out)
    }
}

impl<T: Scalar> PartialCorrelationMatrix<T> {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_square_csv(&self.tickers, &self.values, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::ReturnPanel;
    use chrono::NaiveDate;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("S{i}")).collect()
    }

    fn panel(cols: &[Vec<f64>]) -> ReturnPanel<f64> {
        let n = cols[0].len();
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..n)
            .map(|k| start + chrono::Days::new(k as u64))
            .collect();
        let mut values = Vec::new();
        for t in 0..n {
            values.extend(cols.iter().map(|c| c[t]));
        }
        ReturnPanel::new(dates, names(cols.len()), values).unwrap()
    }

    #[test]
    fn identical_and_negated_columns() {
        let x = vec![0.01, -0.02, 0.03, 0.005];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let p = panel(&[x.clone(), x.clone(), neg]);
        let r = correlation_matrix(&p.full_window()).unwrap();
        assert!((r.values()[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((r.values()[(0, 2)] + 1.0).abs() < 1e-15);
        assert_eq!(r.values()[(1, 1)], 1.0);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let p = panel(&[vec![0.1, 0.2, 0.3], vec![0.01, 0.01, 0.01]]);
        match correlation_matrix(&p.full_window()) {
            Err(Error::DegenerateColumn { ticker }) => assert_eq!(ticker, "S1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covariance_hand_example() {
        let p = panel(&[vec![0.0, 1.0], vec![0.0, 2.0]]);
        let s = covariance_matrix(&p.full_window()).unwrap();
        assert_eq!(s.values()[(0, 0)], 0.5);
        assert_eq!(s.values()[(1, 1)], 2.0);
        assert_eq!(s.values()[(0, 1)], 1.0);
    }

    #[test]
    fn constant_column_gives_zero_covariance_row() {
        let p = panel(&[vec![0.1, 0.2, 0.4], vec![0.3, 0.3, 0.3]]);
        let s = covariance_matrix(&p.full_window()).unwrap();
        assert_eq!(s.values()[(1, 1)], 0.0);
        assert_eq!(s.values()[(0, 1)], 0.0);
        assert_eq!(s.values()[(1, 0)], 0.0);
    }

    #[test]
    fn two_by_two_partial_is_the_correlation() {
        for r in [0.1f64, 0.37, 0.9, -0.6] {
            let m = CorrelationMatrix::new(
                names(2),
                Matrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap(),
            )
            .unwrap();
            let q = partial_correlations(&m).unwrap();
            assert!((q.values()[(0, 1)] - r).abs() < 1e-14);
            assert!((kmo(&m).unwrap() - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn equicorrelated_three() {
        let m = CorrelationMatrix::<f64>::equicorrelated(names(3), 0.5).unwrap();
        let q = partial_correlations(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((q.values()[(i, j)] - 1.0 / 3.0).abs() < 1e-14);
                }
            }
        }
        assert!((kmo(&m).unwrap() - 9.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_zero_partials_and_undefined_kmo() {
        let m = CorrelationMatrix::<f64>::new(names(4), Matrix::identity(4)).unwrap();
        let q = partial_correlations(&m).unwrap();
        assert_eq!(q.values(), &Matrix::identity(4));
        assert!(matches!(kmo(&m), Err(Error::UndefinedStatistic(_))));
    }

    #[test]
    fn singular_correlation_reports_condition() {
        let m = CorrelationMatrix::<f64>::equicorrelated(names(3), 1.0).unwrap();
        assert!(matches!(kmo(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn correlation_validation() {
        let bad_diag = Matrix::from_rows(&[vec![1.1, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(CorrelationMatrix::new(names(2), bad_diag).is_err());
        let too_big = Matrix::from_rows(&[vec![1.0, 1.5], vec![1.5, 1.0]]).unwrap();
        assert!(CorrelationMatrix::new(names(2), too_big).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]).unwrap();
        assert!(matches!(
            CorrelationMatrix::new(names(2), asym),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn square_csv_roundtrip() {
        let m = CorrelationMatrix::equicorrelated(names(3), 0.12345678901234568).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(",S0,S1,S2\nS0,"));
        let (tickers, values) = read_square_csv::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(tickers, names(3));
        assert_eq!(&values, m.values());
    }

    #[test]
    fn works_in_single_precision() {
        let m = CorrelationMatrix::<f32>::equicorrelated(names(3), 0.5).unwrap();
        assert!((kmo(&m).unwrap() - 9.0 / 13.0).abs() < 1e-5);
    }
}
