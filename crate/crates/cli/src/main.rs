//! `mobstat` command-line front end.
//!
//! Exit status: 0 success, 1 usage/configuration error, 2 data error,
//! 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use mobstat::betareg::IncomeUnits;
use mobstat::did::{DEFAULT_DRAWS_PER_CELL, DEFAULT_SAMPLES};
use mobstat::error::ErrorClass;
use mobstat::granger::ScanDirection;

use commands::{DidArgs, ModelSource, SynthArgs};
use config::{Period, RunConfig};

#[derive(Parser)]
#[command(
    name = "mobstat",
    version,
    about = "Mobility and fatality time-series statistics"
)]
struct Cli {
    /// Directory for output artifacts.
    #[arg(
        long,
        global = true,
        env = "MOBSTAT_OUT",
        default_value = "mobstat-out"
    )]
    out: PathBuf,

    /// Seed for every random component.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DailyInputs {
    /// Daily CBG mobility CSV.
    #[arg(long)]
    mobility: Option<PathBuf>,
    /// Daily cumulative fatalities CSV.
    #[arg(long)]
    fatalities: Option<PathBuf>,
    /// First day of the first week (default: first date present in both inputs).
    #[arg(long)]
    anchor: Option<NaiveDate>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with a known mobility→deaths lag.
    Synth {
        #[arg(long)]
        cbgs: Option<usize>,
        #[arg(long)]
        weeks: Option<usize>,
        /// Weeks between a mobility change and its effect on deaths.
        #[arg(long)]
        lag: Option<usize>,
        /// Weekly deaths per unit of home fraction (negative: staying home saves lives).
        #[arg(long, allow_hyphen_values = true)]
        strength: Option<f64>,
        #[arg(long)]
        death_noise: Option<f64>,
    },
    /// Aggregate daily inputs into weekly national series.
    Ingest {
        #[command(flatten)]
        inputs: DailyInputs,
    },
    /// KPSS level-stationarity test on the numeric columns of a CSV.
    Kpss {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: Option<String>,
        /// Bartlett truncation lag (default: floor(4 (T/100)^(1/4))).
        #[arg(long)]
        lag: Option<usize>,
    },
    /// Granger causality scan over lags 1..=max-lag.
    Granger {
        #[command(flatten)]
        inputs: DailyInputs,
        /// Weekly CSV from `ingest`, instead of the daily inputs.
        #[arg(long, conflicts_with_all = ["mobility", "fatalities"])]
        weekly: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        max_lag: usize,
        #[arg(long, default_value = "both")]
        direction: ScanDirection,
    },
    /// VAR(3) fit and rolling one-week-ahead backtest.
    Forecast {
        #[command(flatten)]
        inputs: DailyInputs,
        #[arg(long, conflicts_with_all = ["mobility", "fatalities"])]
        weekly: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        holdout: usize,
    },
    /// Beta regressions of mean stay-home time on demographics, pre and post.
    Betareg {
        #[arg(long)]
        mobility: PathBuf,
        #[arg(long)]
        demographics: PathBuf,
        #[arg(long)]
        pre_period: Period,
        #[arg(long)]
        post_period: Period,
        #[arg(long, default_value = "race", value_parser = ["race", "race-income", "age"])]
        model: String,
        #[arg(long, value_enum, default_value = "dollars")]
        income_units: UnitsArg,
        /// Map exact 0/1 responses into the open interval.
        #[arg(long)]
        adjust_boundary: bool,
    },
    /// Resampling difference-in-differences between two populations.
    Did {
        /// Fits written by `betareg`.
        #[arg(
            long,
            required_unless_present = "published",
            conflicts_with = "published"
        )]
        fits: Option<PathBuf>,
        /// Built-in published model family: race, race-income or age.
        #[arg(long)]
        published: Option<String>,
        /// Population name (e.g. black, older50) or covariate vector.
        #[arg(long, allow_hyphen_values = true)]
        p1: String,
        #[arg(long, allow_hyphen_values = true)]
        p2: String,
        /// Median income (model units) for named populations under race-income.
        #[arg(long)]
        income: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_DRAWS_PER_CELL)]
        draws_per_cell: usize,
    },
    /// Write cbgs.json, flows.json and timeseries.json for the dashboard.
    ExportDashboard {
        #[arg(long)]
        mobility: PathBuf,
        #[arg(long)]
        demographics: PathBuf,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum UnitsArg {
    Dollars,
    Thousands,
}

impl From<UnitsArg> for IncomeUnits {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Dollars => IncomeUnits::Dollars,
            UnitsArg::Thousands => IncomeUnits::Thousands,
        }
    }
}

fn run(cli: Cli) -> mobstat::Result<()> {
    let mut cfg = RunConfig {
        out_dir: cli.out,
        seed: cli.seed,
        ..RunConfig::default()
    };
    let set_daily = |cfg: &mut RunConfig, inputs: DailyInputs| {
        cfg.mobility = inputs.mobility;
        cfg.fatalities = inputs.fatalities;
        cfg.anchor = inputs.anchor;
    };
    match cli.command {
        Command::Synth {
            cbgs,
            weeks,
            lag,
            strength,
            death_noise,
        } => commands::synth(
            &cfg,
            &SynthArgs {
                cbgs,
                weeks,
                lag,
                strength,
                death_noise,
            },
        ),
        Command::Ingest { inputs } => {
            set_daily(&mut cfg, inputs);
            commands::ingest(&cfg)
        }
        Command::Kpss { input, column, lag } => {
            commands::kpss(&cfg, &input, column.as_deref(), lag)
        }
        Command::Granger {
            inputs,
            weekly,
            max_lag,
            direction,
        } => {
            set_daily(&mut cfg, inputs);
            cfg.max_lag = max_lag;
            commands::granger(&cfg, weekly.as_deref(), direction)
        }
        Command::Forecast {
            inputs,
            weekly,
            holdout,
        } => {
            set_daily(&mut cfg, inputs);
            commands::forecast(&cfg, weekly.as_deref(), holdout)
        }
        Command::Betareg {
            mobility,
            demographics,
            pre_period,
            post_period,
            model,
            income_units,
            adjust_boundary,
        } => {
            cfg.mobility = Some(mobility);
            cfg.demographics = Some(demographics);
            cfg.pre_period = Some(pre_period);
            cfg.post_period = Some(post_period);
            cfg.validate()?;
            commands::betareg(&cfg, &model, income_units.into(), adjust_boundary)
        }
        Command::Did {
            fits,
            published,
            p1,
            p2,
            income,
            samples,
            draws_per_cell,
        } => {
            let source = match (&fits, &published) {
                (Some(path), _) => ModelSource::Fits(path),
                (None, Some(family)) => ModelSource::Published(family),
                (None, None) => unreachable!("clap requires --fits or --published"),
            };
            commands::did(
                &cfg,
                &DidArgs {
                    source,
                    p1: &p1,
                    p2: &p2,
                    income,
                    samples,
                    draws_per_cell,
                },
            )
        }
        Command::ExportDashboard {
            mobility,
            demographics,
        } => {
            cfg.mobility = Some(mobility);
            cfg.demographics = Some(demographics);
            commands::export_dashboard(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            })
        }
    }
}
