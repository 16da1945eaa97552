use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mobstat::betareg::published::{self, PublishedModel};
use mobstat::betareg::{
    betareg_fit, format_fit_table, mean_time_home, BetaModel, BetaRegFit, CovariateDesign,
    CovariateSet, IncomeUnits,
};
use mobstat::bundle::export_dashboard_bundle;
use mobstat::did::{
    did_test_with, format_block_table, hypothetical_block_report, DidConfig, DidResult,
};
use mobstat::forecast::{rolling_backtest, var_fit, write_backtest_csv};
use mobstat::granger::{format_scan_table, granger_scan, ScanDirection};
use mobstat::ingest::{
    parse_demographics_csv, parse_fatalities_csv, parse_mobility_csv, read_weekly_csv,
    synthesize_dataset, weekly_aggregate, write_demographics_csv, write_fatalities_csv,
    write_mobility_csv, write_weekly_csv, SynthConfig, WeeklyPair,
};
use mobstat::stationarity::{kpss_test, KpssResult, TruncationLag};
use mobstat::{Error, Result};

use crate::config::{parse_population, RunConfig};

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(cfg.out_dir.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Weekly series from `--weekly`, or aggregated from the daily inputs.
fn load_weekly(cfg: &RunConfig, weekly: Option<&Path>) -> Result<WeeklyPair> {
    if let Some(path) = weekly {
        return read_weekly_csv(path);
    }
    let mobility = parse_mobility_csv(RunConfig::require(&cfg.mobility, "mobility")?)?;
    let fatalities = parse_fatalities_csv(RunConfig::require(&cfg.fatalities, "fatalities")?)?;
    weekly_aggregate(&mobility, &fatalities, cfg.anchor)
}

/// Overrides for [`SynthConfig::default`].
pub struct SynthArgs {
    pub cbgs: Option<usize>,
    pub weeks: Option<usize>,
    pub lag: Option<usize>,
    pub strength: Option<f64>,
    pub death_noise: Option<f64>,
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<()> {
    let d = SynthConfig::default();
    let config = SynthConfig {
        n_cbgs: args.cbgs.unwrap_or(d.n_cbgs),
        n_weeks: args.weeks.unwrap_or(d.n_weeks),
        coupling_lag: args.lag.unwrap_or(d.coupling_lag),
        coupling_strength: args.strength.unwrap_or(d.coupling_strength),
        death_noise: args.death_noise.unwrap_or(d.death_noise),
        seed: cfg.seed,
        ..d
    };
    let data = synthesize_dataset(&config)?;
    write_mobility_csv(out_path(cfg, "mobility.csv")?, &data.mobility)?;
    write_fatalities_csv(out_path(cfg, "fatalities.csv")?, &data.fatalities)?;
    write_demographics_csv(out_path(cfg, "demographics.csv")?, &data.demographics)?;
    write_json(&out_path(cfg, "synth.json")?, &config)?;
    println!(
        "synthetic dataset: {} CBGs x {} days ({} weeks), coupling lag {}, seed {}",
        config.n_cbgs,
        config.n_days(),
        config.n_weeks,
        config.coupling_lag,
        config.seed
    );
    println!(
        "wrote mobility.csv, fatalities.csv, demographics.csv, synth.json to {}",
        cfg.out_dir.display()
    );
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let weekly = load_weekly(cfg, None)?;
    write_weekly_csv(out_path(cfg, "weekly.csv")?, &weekly)?;
    println!("{:<12}{:>10}{:>12}", "week_start", "h_us", "deaths");
    for i in 0..weekly.len() {
        println!(
            "{:<12}{:>10.4}{:>12.0}",
            weekly.week_start[i].to_string(),
            weekly.h_us[i],
            weekly.deaths[i]
        );
    }
    println!(
        "{} weeks written to {}",
        weekly.len(),
        cfg.out_dir.join("weekly.csv").display()
    );
    Ok(())
}

/// Numeric columns of a CSV file; with `column` set only that one, which
/// must then parse completely.
fn numeric_columns(path: &Path, column: Option<&str>) -> Result<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let selected: Vec<usize> =
        match column {
            Some(name) => vec![headers.iter().position(|h| h == name).ok_or_else(|| {
                Error::MissingColumn {
                    column: name.to_string(),
                }
            })?],
            None => (0..headers.len()).collect(),
        };
    let mut values: Vec<Option<Vec<f64>>> = vec![Some(Vec::new()); headers.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &selected {
            let Some(col) = values[c].as_mut() else {
                continue;
            };
            match record.get(c).map(|v| v.trim().parse::<f64>()) {
                Some(Ok(v)) => col.push(v),
                _ if column.is_some() => {
                    return Err(Error::Row {
                        line: line as u64 + 2,
                        message: format!("column `{}` is not numeric", headers[c]),
                    })
                }
                _ => values[c] = None,
            }
        }
    }
    let out: Vec<(String, Vec<f64>)> = selected
        .into_iter()
        .filter_map(|c| values[c].take().map(|v| (headers[c].clone(), v)))
        .collect();
    if out.is_empty() {
        return Err(Error::Aggregation(format!(
            "no numeric columns in {}",
            path.display()
        )));
    }
    Ok(out)
}

pub fn kpss(cfg: &RunConfig, input: &Path, column: Option<&str>, lag: Option<usize>) -> Result<()> {
    let lag = lag.map_or(TruncationLag::Auto, TruncationLag::Fixed);
    let mut results: BTreeMap<String, KpssResult> = BTreeMap::new();
    println!(
        "{:<16}{:>10}{:>6}{:>10}{:>12}",
        "series", "KPSS", "lag", "5% cv", "stationary"
    );
    for (name, series) in numeric_columns(input, column)? {
        let r =
            kpss_test(&series, lag).inspect_err(|_| eprintln!("while testing column `{name}`"))?;
        println!(
            "{:<16}{:>10.4}{:>6}{:>10.3}{:>12}",
            name,
            r.statistic,
            r.truncation_lag,
            r.critical_value(0.05).unwrap_or(f64::NAN),
            if r.reject_at_5pct { "no" } else { "yes" }
        );
        results.insert(name, r);
    }
    write_json(&out_path(cfg, "kpss.json")?, &results)
}

pub fn granger(cfg: &RunConfig, weekly: Option<&Path>, direction: ScanDirection) -> Result<()> {
    let series = load_weekly(cfg, weekly)?;
    let scans = granger_scan(&series, cfg.max_lag, direction)?;
    for scan in &scans {
        println!("{}", format_scan_table(scan));
    }
    write_json(&out_path(cfg, "granger.json")?, &scans)
}

pub fn forecast(cfg: &RunConfig, weekly: Option<&Path>, holdout: usize) -> Result<()> {
    let series = load_weekly(cfg, weekly)?;
    let rows = rolling_backtest(&series, holdout)?;
    let model = var_fit(&series)?;
    write_backtest_csv(out_path(cfg, "backtest.csv")?, &rows)?;
    write_json(&out_path(cfg, "var.json")?, &model)?;
    println!("{:<12}{:>12}{:>12}", "week_start", "actual", "predicted");
    for r in &rows {
        println!(
            "{:<12}{:>12.1}{:>12.1}",
            r.week_start.to_string(),
            r.actual,
            r.predicted
        );
    }
    println!(
        "VAR on {} weeks: R² {:.3}, residual SE {:.1}, h_us(t-3) coefficient {:.2} (p {:.3})",
        series.len(),
        model.r2,
        model.residual_se,
        model.mobility_coefficients[2],
        model.mobility_p_values[2]
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaregArtifact {
    pub model: String,
    pub pre_period: String,
    pub post_period: String,
    pub pre: BetaRegFit,
    pub post: BetaRegFit,
}

pub fn covariate_set(model: &str, units: IncomeUnits) -> Result<CovariateSet> {
    match model {
        "race" => Ok(CovariateSet::Race),
        "race-income" => Ok(CovariateSet::RaceIncome(units)),
        "age" => Ok(CovariateSet::Age),
        other => Err(Error::Config(format!(
            "unknown model `{other}` (expected race, race-income or age)"
        ))),
    }
}

fn named_blocks(names: &[String]) -> Vec<(String, Vec<f64>)> {
    match names.len() {
        5 => published::race_blocks(),
        1 => vec![
            ("older50".into(), vec![1.0]),
            ("younger50".into(), vec![0.0]),
        ],
        _ => Vec::new(),
    }
}

pub fn betareg(
    cfg: &RunConfig,
    model: &str,
    units: IncomeUnits,
    adjust_boundary: bool,
) -> Result<()> {
    let set = covariate_set(model, units)?;
    let pre_period = cfg
        .pre_period
        .ok_or_else(|| Error::Config("missing required --pre-period".into()))?;
    let post_period = cfg
        .post_period
        .ok_or_else(|| Error::Config("missing required --post-period".into()))?;
    let mobility = parse_mobility_csv(RunConfig::require(&cfg.mobility, "mobility")?)?;
    let demographics =
        parse_demographics_csv(RunConfig::require(&cfg.demographics, "demographics")?)?;

    let fit_period = |start, end| -> Result<BetaRegFit> {
        let response = mean_time_home(&mobility, start, end);
        if response.is_empty() {
            return Err(Error::Aggregation(format!(
                "no mobility records between {start} and {end}"
            )));
        }
        let mut design = CovariateDesign::from_demographics(&demographics, &response, set)?;
        if adjust_boundary {
            design = design.with_boundary_adjustment();
        }
        betareg_fit(&design)
    };
    let pre = fit_period(pre_period.start, pre_period.end)?;
    let post = fit_period(post_period.start, post_period.end)?;

    println!("{}", format_fit_table(&[("pre", &pre), ("post", &post)]));
    let blocks = named_blocks(&set.names());
    if !blocks.is_empty() {
        println!(
            "{}",
            format_block_table(&hypothetical_block_report(&pre, &post, &blocks)?)
        );
    }
    let artifact = BetaregArtifact {
        model: model.to_string(),
        pre_period: pre_period.to_string(),
        post_period: post_period.to_string(),
        pre,
        post,
    };
    write_json(&out_path(cfg, "betareg.json")?, &artifact)
}

pub enum ModelSource<'a> {
    Fits(&'a Path),
    Published(&'a str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidArtifact {
    pub source: String,
    pub covariate_names: Vec<String>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub result: DidResult,
}

fn published_pair(family: &str) -> Result<(BetaModel, BetaModel)> {
    let (pre, post): (PublishedModel, PublishedModel) =
        published::by_family(family).ok_or_else(|| {
            Error::Config(format!(
                "unknown published family `{family}` (expected race, race-income or age)"
            ))
        })?;
    Ok((pre.to_model(), post.to_model()))
}

pub struct DidArgs<'a> {
    pub source: ModelSource<'a>,
    pub p1: &'a str,
    pub p2: &'a str,
    pub income: Option<f64>,
    pub samples: usize,
    pub draws_per_cell: usize,
}

pub fn did(cfg: &RunConfig, args: &DidArgs) -> Result<()> {
    let (pre, post, source) = match args.source {
        ModelSource::Fits(path) => {
            let artifact: BetaregArtifact = serde_json::from_str(&fs::read_to_string(path)?)?;
            let to_model = |f: &BetaRegFit| BetaModel {
                coefficient_names: f.coefficient_names.clone(),
                coefficients: f.coefficients.clone(),
                precision_phi: f.precision_phi,
            };
            (
                to_model(&artifact.pre),
                to_model(&artifact.post),
                path.display().to_string(),
            )
        }
        ModelSource::Published(family) => {
            let (pre, post) = published_pair(family)?;
            (pre, post, format!("published:{family}"))
        }
    };
    if pre.coefficient_names != post.coefficient_names {
        return Err(Error::Config(format!(
            "pre and post models disagree on covariates: {:?} vs {:?}",
            pre.coefficient_names, post.coefficient_names
        )));
    }
    let names = &pre.coefficient_names[1..];
    let p1 = parse_population(args.p1, names, args.income)?;
    let p2 = parse_population(args.p2, names, args.income)?;
    let config = DidConfig {
        n_samples: args.samples,
        draws_per_cell: args.draws_per_cell,
        seed: cfg.seed,
        ..DidConfig::default()
    };
    let result = did_test_with(&pre, &post, &p1, &p2, &config)?;
    println!(
        "δ({}, {}) = {:+.2} pp{}  (analytic {:+.2} pp, p = {:.4}, 95% band [{:.2}, {:.2}] pp)",
        args.p1,
        args.p2,
        result.delta_estimate,
        mobstat::stats::significance_stars(result.p_value),
        result.analytic_delta,
        result.p_value,
        result.delta_quantiles[0],
        result.delta_quantiles[2]
    );
    println!(
        "{} resamples, {} draws per cell, seed {}",
        result.n_samples, result.draws_per_cell, result.seed
    );
    let artifact = DidArtifact {
        source,
        covariate_names: names.to_vec(),
        p1,
        p2,
        result,
    };
    write_json(&out_path(cfg, "did.json")?, &artifact)
}

pub fn export_dashboard(cfg: &RunConfig) -> Result<()> {
    let mobility = parse_mobility_csv(RunConfig::require(&cfg.mobility, "mobility")?)?;
    let demographics =
        parse_demographics_csv(RunConfig::require(&cfg.demographics, "demographics")?)?;
    let bundle = export_dashboard_bundle(&mobility, &demographics, &cfg.out_dir)?;
    println!(
        "dashboard bundle: {} CBGs with demographics, {} origins, {} days -> {}",
        bundle.cbgs.cbgs.len(),
        bundle.flows.origins.len(),
        bundle.timeseries.dates.len(),
        cfg.out_dir.display()
    );
    Ok(())
}
