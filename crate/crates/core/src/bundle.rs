//! Static JSON bundle for the exploration dashboard: `cbgs.json`,
//! `flows.json` and `timeseries.json` in one directory.
//!
//! All maps are ordered, so identical inputs give byte-identical files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CbgDemographics, CbgId, DailyCbgRecord, RaceFractions};

pub const SCHEMA_VERSION: u32 = 1;
pub const CBGS_FILE: &str = "cbgs.json";
pub const FLOWS_FILE: &str = "flows.json";
pub const TIMESERIES_FILE: &str = "timeseries.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbgEntry {
    pub race_fractions: RaceFractions,
    pub older50_fraction: f64,
    pub median_income: f64,
    pub population: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbgsFile {
    pub schema_version: u32,
    pub cbgs: BTreeMap<CbgId, CbgEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub destination: CbgId,
    pub visits: u64,
    pub self_loop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyFlows {
    pub date: NaiveDate,
    pub destinations: Vec<FlowEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowsFile {
    pub schema_version: u32,
    /// Origin → one entry per reported day, in date order.
    pub origins: BTreeMap<CbgId, Vec<DailyFlows>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbgSeries {
    /// Completely-home devices over observed devices; `null` when the CBG
    /// has no record or no devices that day.
    pub home_fraction: Vec<Option<f64>>,
    /// Visits arriving from any origin, self-loops included.
    pub incoming_visits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeseriesFile {
    pub schema_version: u32,
    pub dates: Vec<NaiveDate>,
    pub cbgs: BTreeMap<CbgId, CbgSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DashboardBundle {
    pub cbgs: CbgsFile,
    pub flows: FlowsFile,
    pub timeseries: TimeseriesFile,
}

pub fn build_bundle(
    mobility: &[DailyCbgRecord],
    demographics: &[CbgDemographics],
) -> Result<DashboardBundle> {
    let mut ids: BTreeSet<CbgId> = demographics.iter().map(|d| d.cbg_id.clone()).collect();
    ids.extend(mobility.iter().map(|r| r.cbg_id.clone()));
    if ids.is_empty() {
        return Err(Error::Export("no census block groups to export".into()));
    }

    let cbgs = demographics
        .iter()
        .map(|d| {
            (
                d.cbg_id.clone(),
                CbgEntry {
                    race_fractions: d.race_fractions,
                    older50_fraction: d.older50_fraction,
                    median_income: d.median_income,
                    population: d.population,
                },
            )
        })
        .collect();

    let mut origins: BTreeMap<CbgId, BTreeMap<NaiveDate, Vec<FlowEdge>>> = BTreeMap::new();
    for r in mobility {
        let edges = r
            .destination_flows
            .iter()
            .map(|(dest, &visits)| FlowEdge {
                destination: dest.clone(),
                visits,
                self_loop: *dest == r.cbg_id,
            })
            .collect::<Vec<_>>();
        let days = origins.entry(r.cbg_id.clone()).or_default();
        if days.insert(r.date, edges).is_some() {
            return Err(Error::Export(format!(
                "duplicate mobility record for {} on {}",
                r.cbg_id, r.date
            )));
        }
    }
    let flows = FlowsFile {
        schema_version: SCHEMA_VERSION,
        origins: origins
            .into_iter()
            .map(|(id, days)| {
                let days = days
                    .into_iter()
                    .map(|(date, destinations)| DailyFlows { date, destinations })
                    .collect();
                (id, days)
            })
            .collect(),
    };

    let dates: Vec<NaiveDate> = mobility
        .iter()
        .map(|r| r.date)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let day_index: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut series: BTreeMap<CbgId, CbgSeries> = ids
        .iter()
        .map(|id| {
            (
                id.clone(),
                CbgSeries {
                    home_fraction: vec![None; dates.len()],
                    incoming_visits: vec![0; dates.len()],
                },
            )
        })
        .collect();
    for r in mobility {
        let t = day_index[&r.date];
        if r.device_count > 0 {
            let s = series.get_mut(&r.cbg_id).expect("origin registered");
            s.home_fraction[t] = Some(r.completely_home_count as f64 / r.device_count as f64);
        }
        for (dest, &visits) in &r.destination_flows {
            series
                .entry(dest.clone())
                .or_insert_with(|| CbgSeries {
                    home_fraction: vec![None; dates.len()],
                    incoming_visits: vec![0; dates.len()],
                })
                .incoming_visits[t] += visits;
        }
    }

    Ok(DashboardBundle {
        cbgs: CbgsFile {
            schema_version: SCHEMA_VERSION,
            cbgs,
        },
        flows,
        timeseries: TimeseriesFile {
            schema_version: SCHEMA_VERSION,
            dates,
            cbgs: series,
        },
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn export_dashboard_bundle(
    mobility: &[DailyCbgRecord],
    demographics: &[CbgDemographics],
    out_dir: &Path,
) -> Result<DashboardBundle> {
    let bundle = build_bundle(mobility, demographics)?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join(CBGS_FILE), &bundle.cbgs)?;
    write_json(&out_dir.join(FLOWS_FILE), &bundle.flows)?;
    write_json(&out_dir.join(TIMESERIES_FILE), &bundle.timeseries)?;
    Ok(bundle)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn check_version(file: &str, version: u32) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Export(format!(
            "{file} has schema_version {version}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

pub fn read_dashboard_bundle(dir: &Path) -> Result<DashboardBundle> {
    let cbgs: CbgsFile = read_json(&dir.join(CBGS_FILE))?;
    check_version(CBGS_FILE, cbgs.schema_version)?;
    let flows: FlowsFile = read_json(&dir.join(FLOWS_FILE))?;
    check_version(FLOWS_FILE, flows.schema_version)?;
    let timeseries: TimeseriesFile = read_json(&dir.join(TIMESERIES_FILE))?;
    check_version(TIMESERIES_FILE, timeseries.schema_version)?;
    Ok(DashboardBundle {
        cbgs,
        flows,
        timeseries,
    })
}
