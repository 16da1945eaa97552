//! One-week-ahead fatality forecaster: the unrestricted Granger model with
//! three lags of each series, fit on levels.

use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ingest::WeeklyPair;
use crate::stats::{ols_fit, OlsFit};

pub const VAR_LAGS: usize = 3;
/// Three lags plus seven parameters needs at least eight usable rows.
pub const MIN_TRAINING_WEEKS: usize = VAR_LAGS + 2 * VAR_LAGS + 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub intercept: f64,
    /// Coefficients on y(t-1), y(t-2), y(t-3).
    pub death_coefficients: [f64; VAR_LAGS],
    /// Coefficients on h_US(t-1), h_US(t-2), h_US(t-3).
    pub mobility_coefficients: [f64; VAR_LAGS],
    pub death_p_values: [f64; VAR_LAGS],
    pub mobility_p_values: [f64; VAR_LAGS],
    pub r2: f64,
    pub residual_se: f64,
    pub n_obs: usize,
}

impl VarModel {
    fn from_ols(fit: &OlsFit) -> Self {
        let c = &fit.coefficients;
        let p = &fit.p_values;
        VarModel {
            intercept: c[0],
            death_coefficients: [c[1], c[2], c[3]],
            mobility_coefficients: [c[4], c[5], c[6]],
            death_p_values: [p[1], p[2], p[3]],
            mobility_p_values: [p[4], p[5], p[6]],
            r2: fit.r2,
            residual_se: fit.residual_standard_error(),
            n_obs: fit.n_obs,
        }
    }

    /// Parameter vector in design-column order.
    pub fn coefficient_vector(&self) -> Vec<f64> {
        let mut v = vec![self.intercept];
        v.extend_from_slice(&self.death_coefficients);
        v.extend_from_slice(&self.mobility_coefficients);
        v
    }
}

/// Design rows `[1, y(t-1..3), h(t-1..3)]` and responses `y(t)` for
/// t = 3..n.
pub fn var_design(weekly: &WeeklyPair) -> (DMatrix<f64>, Vec<f64>) {
    let n = weekly.len();
    let rows = n.saturating_sub(VAR_LAGS);
    let design = DMatrix::from_fn(rows, 1 + 2 * VAR_LAGS, |r, c| {
        let t = r + VAR_LAGS;
        match c {
            0 => 1.0,
            1..=3 => weekly.deaths[t - c],
            _ => weekly.h_us[t - (c - VAR_LAGS)],
        }
    });
    (design, weekly.deaths[VAR_LAGS.min(n)..].to_vec())
}

pub fn var_fit(weekly: &WeeklyPair) -> Result<VarModel> {
    if weekly.len() < MIN_TRAINING_WEEKS {
        return Err(Error::InsufficientObservations {
            needed: MIN_TRAINING_WEEKS,
            got: weekly.len(),
        });
    }
    let (design, response) = var_design(weekly);
    Ok(VarModel::from_ols(&ols_fit(&design, &response)?))
}

/// Predicts next week's deaths from the three most recent values of each
/// series, most recent first.
pub fn var_predict_one(model: &VarModel, last3_h: &[f64], last3_y: &[f64]) -> Result<f64> {
    for s in [last3_h, last3_y] {
        if s.len() != VAR_LAGS {
            return Err(Error::Arity {
                expected: VAR_LAGS,
                got: s.len(),
            });
        }
    }
    let deaths: f64 = model
        .death_coefficients
        .iter()
        .zip(last3_y)
        .map(|(c, y)| c * y)
        .sum();
    let mobility: f64 = model
        .mobility_coefficients
        .iter()
        .zip(last3_h)
        .map(|(c, h)| c * h)
        .sum();
    Ok(model.intercept + deaths + mobility)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestRow {
    pub week_start: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

pub fn rolling_backtest(weekly: &WeeklyPair, holdout_weeks: usize) -> Result<Vec<BacktestRow>> {
    rolling_backtest_with(weekly, holdout_weeks, Exec::default())
}

/// For each of the last `holdout_weeks` weeks, refits on all strictly
/// earlier weeks and predicts that week.
pub fn rolling_backtest_with(
    weekly: &WeeklyPair,
    holdout_weeks: usize,
    exec: Exec,
) -> Result<Vec<BacktestRow>> {
    if holdout_weeks == 0 {
        return Err(Error::Config("holdout_weeks must be at least 1".into()));
    }
    let n = weekly.len();
    if n < holdout_weeks + MIN_TRAINING_WEEKS {
        return Err(Error::InsufficientObservations {
            needed: holdout_weeks + MIN_TRAINING_WEEKS,
            got: n,
        });
    }
    let first = n - holdout_weeks;
    exec.map(holdout_weeks, |i| {
        let t = first + i;
        let model = var_fit(&weekly.truncated(t))?;
        let h = [weekly.h_us[t - 1], weekly.h_us[t - 2], weekly.h_us[t - 3]];
        let y = [
            weekly.deaths[t - 1],
            weekly.deaths[t - 2],
            weekly.deaths[t - 3],
        ];
        Ok(BacktestRow {
            week_start: weekly.week_start[t],
            actual: weekly.deaths[t],
            predicted: var_predict_one(&model, &h, &y)?,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_backtest<W: Write>(out: W, rows: &[BacktestRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_backtest_csv(path: impl AsRef<Path>, rows: &[BacktestRow]) -> Result<()> {
    write_backtest(std::fs::File::create(path)?, rows)
}

pub fn read_backtest<R: std::io::Read>(input: R) -> Result<Vec<BacktestRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
