use divpot::{
    factor_model_returns, run_returns, FactorSpec, MeasureSet, MetricsSeries, Regime, ReturnPanel,
    SelectionCriteria, WindowConfig,
};

fn two_regime(seed: u64) -> ReturnPanel<f64> {
    let spec = FactorSpec {
        n_stocks: 12,
        horizon: 900,
        regimes: vec![
            Regime {
                start_day: 0,
                beta: 0.3,
                idio_vol: 0.6,
            },
            Regime {
                start_day: 450,
                beta: 0.8,
                idio_vol: 0.6,
            },
        ],
        seed,
        scale: 0.01,
        start_date: None,
    };
    factor_model_returns(&spec).unwrap()
}

fn config() -> WindowConfig<f64> {
    WindowConfig::new(150, 10, SelectionCriteria::default()).unwrap()
}

fn values(
    series: &MetricsSeries<f64>,
    pick: impl Fn(&divpot::MetricsRow<f64>) -> Option<f64>,
) -> Vec<f64> {
    series.rows.iter().map(|r| pick(r).unwrap()).collect()
}

#[test]
fn parallel_matches_sequential_exactly() {
    let returns = two_regime(11);
    let seq = run_returns(&returns, &config(), MeasureSet::ALL, None, false).unwrap();
    let par = run_returns(&returns, &config(), MeasureSet::ALL, None, true).unwrap();
    assert_eq!(seq, par);
    assert_eq!(seq.to_csv_string(), par.to_csv_string());
}

#[test]
fn ticker_order_does_not_change_the_measures() {
    let returns = two_regime(5);
    let perm: Vec<usize> = vec![7, 2, 11, 0, 5, 9, 1, 10, 3, 8, 6, 4];
    let shuffled = returns.select_columns(&perm);
    let a = run_returns(&returns, &config(), MeasureSet::ALL, None, false).unwrap();
    let b = run_returns(&shuffled, &config(), MeasureSet::ALL, None, false).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.window_end, y.window_end);
        assert_eq!(x.n_selected, y.n_selected);
        for (u, v) in [(&x.kmo, &y.kmo), (&x.pc1_pct, &y.pc1_pct), (&x.dr, &y.dr)] {
            assert!((u.value().unwrap() - v.value().unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn rising_factor_loading_raises_pc1_share() {
    let series = run_returns(&two_regime(3), &config(), MeasureSet::ALL, None, false).unwrap();
    let pc1 = values(&series, |r| r.pc1_pct.value());
    let n = pc1.len() as f64;
    let mean_t = (n - 1.0) / 2.0;
    let mean_y = pc1.iter().sum::<f64>() / n;
    let slope: f64 = pc1
        .iter()
        .enumerate()
        .map(|(t, y)| (t as f64 - mean_t) * (y - mean_y))
        .sum::<f64>();
    assert!(slope > 0.0, "pc1 slope {slope}");

    let dr = values(&series, |r| r.dr.value());
    assert!(dr.last().unwrap() < dr.first().unwrap());
}
