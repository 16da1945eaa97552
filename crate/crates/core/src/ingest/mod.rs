//! Mobility and fatality ingestion, weekly aggregation and a synthetic
//! dataset generator with the same schema.

mod aggregate;
mod csvio;
mod synth;

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aggregate::{national_home_fraction, weekly_aggregate};
pub use csvio::{
    parse_demographics_csv, parse_fatalities_csv, parse_mobility_csv, read_demographics,
    read_fatalities, read_mobility, read_weekly, read_weekly_csv, write_demographics,
    write_demographics_csv, write_fatalities, write_fatalities_csv, write_mobility,
    write_mobility_csv, write_weekly, write_weekly_csv,
};
pub use synth::{synthesize_dataset, SynthConfig, SynthDataset};

/// 12-digit census block group code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CbgId(String);

impl CbgId {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if code.len() == 12 && code.bytes().all(|b| b.is_ascii_digit()) {
            Ok(CbgId(code))
        } else {
            Err(Error::Domain(format!(
                "census block group id must be 12 digits, got `{code}`"
            )))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CbgId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        CbgId::new(value)
    }
}

impl From<CbgId> for String {
    fn from(id: CbgId) -> String {
        id.0
    }
}

impl fmt::Display for CbgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One census-block-group day of mobility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyCbgRecord {
    pub cbg_id: CbgId,
    pub date: NaiveDate,
    /// Devices residing in the CBG that were observed that day.
    pub device_count: u64,
    /// Devices that never left home.
    pub completely_home_count: u64,
    pub median_pct_time_home: f64,
    /// Meters.
    pub median_distance_from_home: f64,
    /// Destination CBG → number of visiting devices. May include the origin.
    pub destination_flows: BTreeMap<CbgId, u64>,
}

impl DailyCbgRecord {
    pub fn validate(&self) -> Result<()> {
        if self.completely_home_count > self.device_count {
            return Err(Error::Domain(format!(
                "completely_home_device_count {} exceeds device_count {}",
                self.completely_home_count, self.device_count
            )));
        }
        if !(0.0..=1.0).contains(&self.median_pct_time_home) {
            return Err(Error::Domain(format!(
                "median_pct_time_home {} outside [0,1]",
                self.median_pct_time_home
            )));
        }
        if self.median_distance_from_home.is_nan() || self.median_distance_from_home < 0.0 {
            return Err(Error::Domain(format!(
                "median_distance_from_home {} is negative",
                self.median_distance_from_home
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatalityRecord {
    pub date: NaiveDate,
    pub cumulative_deaths: u64,
}

/// Aligned weekly national stay-home fraction and new deaths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyPair {
    pub week_start: Vec<NaiveDate>,
    pub h_us: Vec<f64>,
    pub deaths: Vec<f64>,
}

impl WeeklyPair {
    pub fn new(week_start: Vec<NaiveDate>, h_us: Vec<f64>, deaths: Vec<f64>) -> Result<Self> {
        if h_us.len() != deaths.len() || week_start.len() != h_us.len() {
            return Err(Error::Arity {
                expected: week_start.len(),
                got: h_us.len().max(deaths.len()),
            });
        }
        if let Some(h) = h_us.iter().find(|h| !(0.0..=1.0).contains(*h)) {
            return Err(Error::Domain(format!(
                "weekly home fraction {h} outside [0,1]"
            )));
        }
        Ok(WeeklyPair {
            week_start,
            h_us,
            deaths,
        })
    }

    pub fn len(&self) -> usize {
        self.h_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_us.is_empty()
    }

    /// The first `weeks` weeks.
    pub fn truncated(&self, weeks: usize) -> WeeklyPair {
        let w = weeks.min(self.len());
        WeeklyPair {
            week_start: self.week_start[..w].to_vec(),
            h_us: self.h_us[..w].to_vec(),
            deaths: self.deaths[..w].to_vec(),
        }
    }
}

/// Race shares in the order white, black, hispanic, asian, natives+others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceFractions {
    pub white: f64,
    pub black: f64,
    pub hispanic: f64,
    pub asian: f64,
    pub natives_others: f64,
}

impl RaceFractions {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.white,
            self.black,
            self.hispanic,
            self.asian,
            self.natives_others,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        RaceFractions {
            white: a[0],
            black: a[1],
            hispanic: a[2],
            asian: a[3],
            natives_others: a[4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbgDemographics {
    pub cbg_id: CbgId,
    pub race_fractions: RaceFractions,
    pub older50_fraction: f64,
    /// Dollars.
    pub median_income: f64,
    pub population: u64,
}

impl CbgDemographics {
    pub fn validate(&self) -> Result<()> {
        let shares = self.race_fractions.as_array();
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Domain(format!(
                "race fractions for {} must lie in [0,1]",
                self.cbg_id
            )));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "race fractions for {} sum to {total}, expected 1",
                self.cbg_id
            )));
        }
        if !(0.0..=1.0).contains(&self.older50_fraction) {
            return Err(Error::Domain(format!(
                "older50 fraction {} outside [0,1]",
                self.older50_fraction
            )));
        }
        Ok(())
    }
}
