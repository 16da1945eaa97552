use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CbgDemographics, CbgId, DailyCbgRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeUnits {
    #[default]
    Dollars,
    Thousands,
}

/// Which demographic covariates enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateSet {
    /// All five race shares.
    Race,
    /// Race shares plus median income.
    RaceIncome(IncomeUnits),
    /// Share of residents older than 50.
    Age,
}

impl CovariateSet {
    pub fn names(&self) -> Vec<String> {
        let race = ["white", "black", "hispanic", "asian", "natives_others"];
        let mut names: Vec<String> = match self {
            CovariateSet::Age => vec!["older50".into()],
            _ => race.iter().map(|s| s.to_string()).collect(),
        };
        if let CovariateSet::RaceIncome(_) = self {
            names.push("median_income".into());
        }
        names
    }

    pub fn covariates(&self, d: &CbgDemographics) -> Vec<f64> {
        match self {
            CovariateSet::Race => d.race_fractions.as_array().to_vec(),
            CovariateSet::RaceIncome(units) => {
                let mut v = d.race_fractions.as_array().to_vec();
                v.push(match units {
                    IncomeUnits::Dollars => d.median_income,
                    IncomeUnits::Thousands => d.median_income / 1000.0,
                });
                v
            }
            CovariateSet::Age => vec![d.older50_fraction],
        }
    }
}

/// Per-CBG covariates (without intercept) and a response in (0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDesign {
    pub covariate_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl CovariateDesign {
    pub fn new(
        covariate_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        response: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != response.len() {
            return Err(Error::Arity {
                expected: rows.len(),
                got: response.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != covariate_names.len()) {
            return Err(Error::Arity {
                expected: covariate_names.len(),
                got: r.len(),
            });
        }
        if let Some(y) = response.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(Error::Domain(format!("response {y} outside [0,1]")));
        }
        Ok(CovariateDesign {
            covariate_names,
            rows,
            response,
        })
    }

    /// Joins demographics with per-CBG responses; CBGs missing either side
    /// are skipped.
    pub fn from_demographics(
        demographics: &[CbgDemographics],
        response: &BTreeMap<CbgId, f64>,
        set: CovariateSet,
    ) -> Result<Self> {
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        let mut sorted: Vec<&CbgDemographics> = demographics.iter().collect();
        sorted.sort_by(|a, b| a.cbg_id.cmp(&b.cbg_id));
        for d in sorted {
            if let Some(&y) = response.get(&d.cbg_id) {
                rows.push(set.covariates(d));
                ys.push(y);
            }
        }
        CovariateDesign::new(set.names(), rows, ys)
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    /// Maps exact 0 and 1 responses to `(y(N-1) + 0.5) / N`; interior
    /// values are left untouched.
    pub fn with_boundary_adjustment(mut self) -> Self {
        let n = self.response.len() as f64;
        for y in &mut self.response {
            if *y == 0.0 || *y == 1.0 {
                *y = (*y * (n - 1.0) + 0.5) / n;
            }
        }
        self
    }
}

/// Mean daily `median_pct_time_home` per CBG over `start..=end`.
pub fn mean_time_home(
    mobility: &[DailyCbgRecord],
    start: NaiveDate,
    end: NaiveDate,
) -> BTreeMap<CbgId, f64> {
    let mut acc: BTreeMap<CbgId, (f64, usize)> = BTreeMap::new();
    for r in mobility.iter().filter(|r| r.date >= start && r.date <= end) {
        let e = acc.entry(r.cbg_id.clone()).or_default();
        e.0 += r.median_pct_time_home;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(id, (sum, n))| (id, sum / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_adjustment_only_touches_edges() {
        let d = CovariateDesign::new(
            vec!["x".into()],
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0.0, 0.4, 1.0, 0.7],
        )
        .unwrap()
        .with_boundary_adjustment();
        assert_eq!(d.response, vec![0.125, 0.4, 0.875, 0.7]);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(CovariateDesign::new(vec!["x".into()], vec![vec![0.0, 1.0]], vec![0.5]).is_err());
        assert!(CovariateDesign::new(vec!["x".into()], vec![vec![0.0]], vec![1.5]).is_err());
    }

    #[test]
    fn covariate_sets() {
        assert_eq!(CovariateSet::Race.names().len(), 5);
        assert_eq!(
            CovariateSet::RaceIncome(IncomeUnits::Thousands)
                .names()
                .last()
                .unwrap(),
            "median_income"
        );
        assert_eq!(CovariateSet::Age.names(), vec!["older50".to_string()]);
    }
}
