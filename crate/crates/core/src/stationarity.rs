//! KPSS test for level stationarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymptotic upper-tail critical values of the level-stationarity KPSS
/// statistic, keyed by significance level.
pub const LEVEL_CRITICAL_VALUES: [(f64, f64); 4] =
    [(0.10, 0.347), (0.05, 0.463), (0.025, 0.574), (0.01, 0.739)];

pub const MIN_LENGTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpssResult {
    pub statistic: f64,
    pub truncation_lag: usize,
    /// Significance level (as text, e.g. "0.05") → threshold.
    pub critical_values: BTreeMap<String, f64>,
    pub reject_at_5pct: bool,
}

impl KpssResult {
    pub fn critical_value(&self, level: f64) -> Option<f64> {
        LEVEL_CRITICAL_VALUES
            .iter()
            .find(|(l, _)| (*l - level).abs() < 1e-12)
            .map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationLag {
    /// `floor(4 (T/100)^(1/4))`.
    #[default]
    Auto,
    Fixed(usize),
}

pub fn auto_truncation_lag(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Bartlett-kernel long-run variance of already-demeaned residuals.
pub fn bartlett_long_run_variance(residuals: &[f64], lag: usize) -> f64 {
    let n = residuals.len() as f64;
    let mut s2 = residuals.iter().map(|e| e * e).sum::<f64>() / n;
    for s in 1..=lag.min(residuals.len().saturating_sub(1)) {
        let weight = 1.0 - s as f64 / (lag as f64 + 1.0);
        let autocov: f64 = residuals[s..]
            .iter()
            .zip(residuals)
            .map(|(a, b)| a * b)
            .sum();
        s2 += 2.0 * weight * autocov / n;
    }
    s2
}

/// KPSS statistic `T⁻² Σ S_t² / ŝ²(l)` where `S_t` are partial sums of the
/// demeaned series and `ŝ²(l)` its Bartlett long-run variance.
pub fn kpss_test(series: &[f64], lag: TruncationLag) -> Result<KpssResult> {
    let t = series.len();
    if t < MIN_LENGTH {
        return Err(Error::InsufficientObservations {
            needed: MIN_LENGTH,
            got: t,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series contains non-finite values".into()));
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let residuals: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let scale = series.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if residuals
        .iter()
        .all(|e| e.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE))
    {
        return Err(Error::ZeroVariance);
    }

    let truncation_lag = match lag {
        TruncationLag::Auto => auto_truncation_lag(t),
        TruncationLag::Fixed(l) => l,
    };
    let long_run = bartlett_long_run_variance(&residuals, truncation_lag);
    if long_run.is_nan() || long_run <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut partial = 0.0;
    let mut sum_sq = 0.0;
    for e in &residuals {
        partial += e;
        sum_sq += partial * partial;
    }
    let statistic = sum_sq / (t as f64 * t as f64) / long_run;

    let critical_values = LEVEL_CRITICAL_VALUES
        .iter()
        .map(|(level, v)| (level.to_string(), *v))
        .collect();
    Ok(KpssResult {
        statistic,
        truncation_lag,
        critical_values,
        reject_at_5pct: statistic > LEVEL_CRITICAL_VALUES[1].1,
    })
}
