//! Statistical toolkit for relating population mobility to epidemic
//! fatalities and for comparing stay-at-home behavior across demographic
//! groups.
//!
//! The pipeline runs from raw census-block-group (CBG) mobility records
//! through weekly national series, KPSS stationarity checks and a Granger
//! causality scan, to a VAR-style one-week-ahead forecaster. A separate
//! branch fits beta regressions of stay-home time on CBG demographics and
//! compares populations with a resampling difference-in-differences test.
//!
//! Monte Carlo style workloads (resampling, replicate simulation, lag
//! scans, backtest folds) run through [`exec::Exec`], which uses rayon when
//! the `parallel` feature is on and falls back to a sequential loop
//! otherwise. Results are identical either way.

pub mod betareg;
pub mod bundle;
pub mod did;
pub mod error;
pub mod exec;
pub mod forecast;
pub mod granger;
pub mod ingest;
pub mod montecarlo;
pub mod stationarity;
pub mod stats;

pub use error::{Error, Result};
