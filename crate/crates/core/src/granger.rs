//! Granger causality: per-lag restricted/unrestricted autoregressions with a
//! joint F-test, run over a range of lags in either direction after
//! differencing both series to stationarity.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ingest::WeeklyPair;
use crate::stationarity::{kpss_test, TruncationLag};
use crate::stats::{difference_n, nested_f_test, ols_fit, significance_stars};

/// Differencing beyond this order declares the data unsuitable.
pub const MAX_DIFFERENCING_ORDER: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCoefficient {
    pub estimate: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerLagResult {
    pub lag: usize,
    /// Coefficients on x(t-1) .. x(t-lag) in the unrestricted model.
    pub b_coefficients: Vec<LagCoefficient>,
    /// Adjusted R² of the unrestricted model.
    pub adjusted_r2: f64,
    pub restricted_rss: f64,
    pub unrestricted_rss: f64,
    pub f_statistic: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub p_value: f64,
}

impl GrangerLagResult {
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Mobility → deaths.
    Forward,
    /// Deaths → mobility.
    Reverse,
}

impl Direction {
    pub fn label(&self) -> &'static str {
        match self {
            Direction::Forward => "h_us -> deaths",
            Direction::Reverse => "deaths -> h_us",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanDirection {
    #[default]
    Both,
    Forward,
    Reverse,
}

impl ScanDirection {
    fn directions(self) -> &'static [Direction] {
        match self {
            ScanDirection::Both => &[Direction::Forward, Direction::Reverse],
            ScanDirection::Forward => &[Direction::Forward],
            ScanDirection::Reverse => &[Direction::Reverse],
        }
    }
}

impl std::str::FromStr for ScanDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(ScanDirection::Both),
            "forward" => Ok(ScanDirection::Forward),
            "reverse" => Ok(ScanDirection::Reverse),
            other => Err(Error::Config(format!(
                "unknown direction `{other}` (expected both, forward or reverse)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerScan {
    pub direction: Direction,
    pub differencing_order: usize,
    pub results: Vec<GrangerLagResult>,
}

/// Shortest series for which `granger_test` can fit `lag`.
pub fn min_length(lag: usize) -> usize {
    3 * lag + 2
}

/// `[1, lagged blocks...]` rows for t = lag..n.
fn lag_design(blocks: &[&[f64]], lag: usize) -> DMatrix<f64> {
    let n = blocks[0].len();
    let rows = n - lag;
    DMatrix::from_fn(rows, 1 + lag * blocks.len(), |r, c| {
        if c == 0 {
            return 1.0;
        }
        let block = (c - 1) / lag;
        let i = (c - 1) % lag + 1;
        blocks[block][r + lag - i]
    })
}

/// Tests whether lags 1..=`lag` of `x` improve an order-`lag`
/// autoregression of `y`.
pub fn granger_test(x: &[f64], y: &[f64], lag: usize) -> Result<GrangerLagResult> {
    if x.len() != y.len() {
        return Err(Error::Arity {
            expected: y.len(),
            got: x.len(),
        });
    }
    if lag == 0 {
        return Err(Error::Config("lag must be at least 1".into()));
    }
    if y.len() < min_length(lag) {
        return Err(Error::InsufficientObservations {
            needed: min_length(lag),
            got: y.len(),
        });
    }
    let response = &y[lag..];
    let restricted = ols_fit(&lag_design(&[y], lag), response)?;
    let unrestricted = ols_fit(&lag_design(&[y, x], lag), response)?;
    let f = nested_f_test(&restricted, &unrestricted)?;

    let b_coefficients = (1 + lag..1 + 2 * lag)
        .map(|j| LagCoefficient {
            estimate: unrestricted.coefficients[j],
            t_statistic: unrestricted.t_statistics[j],
            p_value: unrestricted.p_values[j],
            stars: significance_stars(unrestricted.p_values[j]).to_string(),
        })
        .collect();
    Ok(GrangerLagResult {
        lag,
        b_coefficients,
        adjusted_r2: unrestricted.adjusted_r2,
        restricted_rss: restricted.rss,
        unrestricted_rss: unrestricted.rss,
        f_statistic: f.f_statistic,
        df_num: f.df_num,
        df_den: f.df_den,
        p_value: f.p_value,
    })
}

/// Smallest order (0..=2) at which both series pass KPSS at 5%, applied
/// equally to both.
pub fn stationary_differencing_order(a: &[f64], b: &[f64]) -> Result<usize> {
    for order in 0..=MAX_DIFFERENCING_ORDER {
        let da = difference_n(a, order)?;
        let db = difference_n(b, order)?;
        let ra = kpss_test(&da, TruncationLag::Auto)?;
        let rb = kpss_test(&db, TruncationLag::Auto)?;
        if !ra.reject_at_5pct && !rb.reject_at_5pct {
            return Ok(order);
        }
    }
    Err(Error::Nonstationary {
        order: MAX_DIFFERENCING_ORDER,
    })
}

pub fn granger_scan(
    weekly: &WeeklyPair,
    max_lag: usize,
    direction: ScanDirection,
) -> Result<Vec<GrangerScan>> {
    granger_scan_with(weekly, max_lag, direction, Exec::default())
}

/// Differences both weekly series to stationarity, then runs
/// [`granger_test`] for lags `1..=max_lag` in each requested direction.
pub fn granger_scan_with(
    weekly: &WeeklyPair,
    max_lag: usize,
    direction: ScanDirection,
    exec: Exec,
) -> Result<Vec<GrangerScan>> {
    if max_lag == 0 {
        return Err(Error::Config("max_lag must be at least 1".into()));
    }
    let order = stationary_differencing_order(&weekly.h_us, &weekly.deaths)?;
    let h = difference_n(&weekly.h_us, order)?;
    let d = difference_n(&weekly.deaths, order)?;
    if h.len() < min_length(max_lag) {
        return Err(Error::InsufficientObservations {
            needed: min_length(max_lag) + order,
            got: weekly.len(),
        });
    }
    direction
        .directions()
        .iter()
        .map(|&dir| {
            let (x, y) = match dir {
                Direction::Forward => (&h, &d),
                Direction::Reverse => (&d, &h),
            };
            let results = exec
                .map(max_lag, |i| granger_test(x, y, i + 1))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(GrangerScan {
                direction: dir,
                differencing_order: order,
                results,
            })
        })
        .collect()
}

fn fmt_coef(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.3e}")
    } else {
        format!("{v:.2}")
    }
}

/// Aligned text table: one column per lag, rows b_1..b_L, adjusted R², F
/// and its p-value in parentheses.
pub fn format_scan_table(scan: &GrangerScan) -> String {
    let lags = scan.results.len();
    let width = 14;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Granger causality {} (differencing order {})",
        scan.direction.label(),
        scan.differencing_order
    );
    let _ = write!(out, "{:<16}", "Lag");
    for r in &scan.results {
        let _ = write!(out, "{:>width$}", r.lag);
    }
    out.push('\n');
    let _ = writeln!(out, "{}", "-".repeat(16 + width * lags));
    for i in 0..lags {
        let _ = write!(out, "{:<16}", format!("b_{}", i + 1));
        for r in &scan.results {
            let cell = r.b_coefficients.get(i).map_or_else(
                || "-".to_string(),
                |c| format!("{}{}", fmt_coef(c.estimate), c.stars),
            );
            let _ = write!(out, "{cell:>width$}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{}", "-".repeat(16 + width * lags));
    let _ = write!(out, "{:<16}", "Adjusted R^2");
    for r in &scan.results {
        let _ = write!(out, "{:>width$.2}", r.adjusted_r2);
    }
    out.push('\n');
    let _ = write!(out, "{:<16}", "F-test");
    for r in &scan.results {
        let _ = write!(
            out,
            "{:>width$}",
            format!("{:.2}{}", r.f_statistic, r.stars())
        );
    }
    out.push('\n');
    let _ = write!(out, "{:<16}", "(p-val)");
    for r in &scan.results {
        let p = if r.p_value < 0.01 {
            "(<0.01)".to_string()
        } else {
            format!("({:.3})", r.p_value)
        };
        let _ = write!(out, "{p:>width$}");
    }
    out.push('\n');
    out.push_str("*** p<0.01, ** p<0.05, * p<0.1\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{rejection_rate, replicate_rng};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn deterministic_lag_one_dependence() {
        let mut rng = replicate_rng(5, 0);
        let x = noise(&mut rng, 100);
        let mut y = vec![0.0; 100];
        y[1..].copy_from_slice(&x[..99]);
        let r = granger_test(&x, &y, 1).unwrap();
        assert!(r.unrestricted_rss < 1e-20, "{}", r.unrestricted_rss);
        assert!(r.p_value < 1e-10);
        assert_eq!(r.b_coefficients.len(), 1);
        assert!((r.b_coefficients[0].estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn minimum_length_enforced() {
        let x = vec![0.0; 10];
        match granger_test(&x, &x, 3) {
            Err(Error::InsufficientObservations { needed, got }) => {
                assert_eq!((needed, got), (11, 10))
            }
            other => panic!("{other:?}"),
        }
        assert!(granger_test(&x, &x[1..], 1).is_err());
    }

    #[test]
    fn power_against_lag_three_construction() {
        let hits = rejection_rate(500, 77, Exec::default(), |rng, _| {
            let n = 150;
            let x = noise(rng, n + 50);
            let mut y = vec![0.0; n + 50];
            for t in 3..n + 50 {
                y[t] = 0.5 * y[t - 1] + 0.8 * x[t - 3] + rng.sample::<f64, _>(StandardNormal);
            }
            granger_test(&x[50..], &y[50..], 3).unwrap().p_value < 0.01
        });
        assert!(hits >= 0.95, "{hits}");
    }

    #[test]
    fn affine_rescaling_invariance() {
        let mut rng = replicate_rng(8, 1);
        let x = noise(&mut rng, 60);
        let y: Vec<f64> = (0..60)
            .map(
                |t| if t > 1 { 0.4 * x[t - 2] } else { 0.0 } + rng.sample::<f64, _>(StandardNormal),
            )
            .collect();
        let base = granger_test(&x, &y, 2).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
        let y2: Vec<f64> = y.iter().map(|v| -0.5 * v + 100.0).collect();
        let moved = granger_test(&x2, &y2, 2).unwrap();
        assert!((base.f_statistic - moved.f_statistic).abs() < 1e-8 * base.f_statistic);
        assert!((base.p_value - moved.p_value).abs() < 1e-10);
        assert!(base.unrestricted_rss <= base.restricted_rss);
    }

    #[test]
    fn scan_shares_differencing_between_directions() {
        let mut rng = replicate_rng(3, 0);
        let n: usize = 60;
        let mut h = vec![0.3];
        for _ in 1..n {
            let last = *h.last().unwrap();
            h.push((last + 0.02 * rng.sample::<f64, _>(StandardNormal)).clamp(0.05, 0.95));
        }
        let deaths: Vec<f64> = (0..n)
            .map(|t| {
                2000.0 - 3000.0 * h[t.saturating_sub(2)]
                    + 10.0 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let weeks = (0..n)
            .map(|i| {
                chrono::NaiveDate::from_ymd_opt(2020, 1, 6).unwrap()
                    + chrono::Days::new(7 * i as u64)
            })
            .collect();
        let weekly = WeeklyPair::new(weeks, h, deaths).unwrap();
        let scans = granger_scan_with(&weekly, 4, ScanDirection::Both, Exec::Sequential).unwrap();
        assert_eq!(scans.len(), 2);
        assert_eq!(scans[0].differencing_order, scans[1].differencing_order);
        for s in &scans {
            let lags: Vec<usize> = s.results.iter().map(|r| r.lag).collect();
            assert_eq!(lags, vec![1, 2, 3, 4]);
        }
        let par = granger_scan_with(&weekly, 4, ScanDirection::Both, Exec::Parallel).unwrap();
        assert_eq!(scans, par);
        let table = format_scan_table(&scans[0]);
        assert_eq!(table.lines().filter(|l| l.starts_with("b_")).count(), 4);
    }

    #[test]
    fn table_layout_with_reference_values() {
        // F statistics and coefficients of a six-lag scan on the original
        // national weekly series; only the layout is checked here.
        let b = [
            vec![263.4],
            vec![156.0, 401.4],
            vec![236.9, 432.7, 348.1],
            vec![230.9, 539.6, 516.2, 186.7],
            vec![344.4, 447.8, 675.9, -18.1, 145.6],
            vec![289.5, 574.9, 760.1, 65.1, -64.3, -10.3],
        ];
        let adj = [0.46, 0.69, 0.77, 0.79, 0.91, 0.9];
        let f = [5.08, 10.3, 11.1, 18.9, 8.5, 12.6];
        let p = [0.03, 0.005, 0.005, 0.005, 0.005, 0.005];
        let results = (0..6)
            .map(|i| GrangerLagResult {
                lag: i + 1,
                b_coefficients: b[i]
                    .iter()
                    .map(|&e| LagCoefficient {
                        estimate: e,
                        t_statistic: f64::NAN,
                        p_value: 0.2,
                        stars: String::new(),
                    })
                    .collect(),
                adjusted_r2: adj[i],
                restricted_rss: f64::NAN,
                unrestricted_rss: f64::NAN,
                f_statistic: f[i],
                df_num: i + 1,
                df_den: 10,
                p_value: p[i],
            })
            .collect();
        let scan = GrangerScan {
            direction: Direction::Forward,
            differencing_order: 1,
            results,
        };
        let table = format_scan_table(&scan);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].contains("h_us -> deaths"));
        let b6 = lines.iter().find(|l| l.starts_with("b_6")).unwrap();
        assert_eq!(
            b6.split_whitespace().collect::<Vec<_>>(),
            ["b_6", "-", "-", "-", "-", "-", "-10.30"]
        );
        let ftest = lines.iter().find(|l| l.starts_with("F-test")).unwrap();
        assert!(ftest.contains("11.10***"));
        assert!(ftest.contains("5.08**"));
        let pvals = lines.iter().find(|l| l.starts_with("(p-val)")).unwrap();
        assert_eq!(pvals.matches("(<0.01)").count(), 5);
        // all rows share the same width
        let width = lines[1].len();
        assert!(lines[3..9].iter().all(|l| l.len() == width));
    }
}
