use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use super::{CbgDemographics, CbgId, DailyCbgRecord, FatalityRecord, RaceFractions};
use crate::betareg::{published, MeanModel};
use crate::error::{Error, Result};
use crate::stats::logistic;

/// Generator settings for a synthetic mobility/fatality/demographics set.
///
/// The weekly national stay-home level follows a reflected random walk.
/// Weekly new deaths are `death_baseline + coupling_strength * h(w - lag)`
/// plus Gaussian noise, so a negative strength means more time at home
/// lowers deaths `coupling_lag` weeks later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_cbgs: usize,
    pub n_weeks: usize,
    pub start_date: NaiveDate,
    pub coupling_lag: usize,
    pub coupling_strength: f64,
    pub death_baseline: f64,
    /// Standard deviation of the weekly death noise.
    pub death_noise: f64,
    /// Standard deviation of the weekly random-walk step of the home fraction.
    pub mobility_step: f64,
    /// Standard deviation of the daily per-CBG home-probability jitter.
    pub daily_noise: f64,
    pub min_devices: u64,
    pub max_devices: u64,
    /// Day from which per-CBG time-at-home follows the post-intervention
    /// race model instead of the pre-intervention one.
    pub intervention_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_cbgs: 20,
            n_weeks: 52,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 6).unwrap(),
            coupling_lag: 3,
            coupling_strength: -5000.0,
            death_baseline: 4000.0,
            death_noise: 30.0,
            mobility_step: 0.03,
            daily_noise: 0.01,
            min_devices: 200,
            max_devices: 800,
            intervention_date: NaiveDate::from_ymd_opt(2020, 3, 16).unwrap(),
            seed: 0,
        }
    }
}

const HOME_LOW: f64 = 0.1;
const HOME_HIGH: f64 = 0.6;
const TIME_HOME_PRECISION: f64 = 14.5;

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.n_cbgs == 0 || self.n_weeks == 0 {
            return Err(Error::Config("CBG and week counts must be positive".into()));
        }
        if self.min_devices == 0 || self.max_devices < self.min_devices {
            return Err(Error::Config(format!(
                "device range {}..={} must be positive and ordered",
                self.min_devices, self.max_devices
            )));
        }
        for (name, v) in [
            ("death_noise", self.death_noise),
            ("mobility_step", self.mobility_step),
            ("daily_noise", self.daily_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be a nonnegative number"
                )));
            }
        }
        if !self.coupling_strength.is_finite() || !self.death_baseline.is_finite() {
            return Err(Error::Config("coupling parameters must be finite".into()));
        }
        if self.n_cbgs > 9_999_999 {
            return Err(Error::Config("too many CBGs for the id scheme".into()));
        }
        Ok(())
    }

    pub fn n_days(&self) -> usize {
        7 * self.n_weeks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDataset {
    pub mobility: Vec<DailyCbgRecord>,
    pub fatalities: Vec<FatalityRecord>,
    pub demographics: Vec<CbgDemographics>,
    /// Latent weekly home fraction driving both outputs.
    pub latent_home: Vec<f64>,
}

fn reflect(mut x: f64) -> f64 {
    loop {
        if x < HOME_LOW {
            x = 2.0 * HOME_LOW - x;
        } else if x > HOME_HIGH {
            x = 2.0 * HOME_HIGH - x;
        } else {
            return x;
        }
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated nonnegative sd")
}

/// Generates a deterministic dataset for `config.seed`.
pub fn synthesize_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let ids: Vec<CbgId> = (0..config.n_cbgs)
        .map(|i| CbgId::new(format!("42003{i:07}")))
        .collect::<Result<_>>()?;

    let unit_gamma = Gamma::new(1.0, 1.0).unwrap();
    let older = Beta::new(2.0, 3.0).unwrap();
    let income = Normal::new(60_000f64.ln(), 0.4).unwrap();
    let demographics: Vec<CbgDemographics> = ids
        .iter()
        .map(|id| {
            let draws: [f64; 5] = std::array::from_fn(|_| unit_gamma.sample(&mut rng));
            let total: f64 = draws.iter().sum();
            CbgDemographics {
                cbg_id: id.clone(),
                race_fractions: RaceFractions::from_array(draws.map(|d| d / total)),
                older50_fraction: older.sample(&mut rng),
                median_income: income.sample(&mut rng).exp().round(),
                population: rng.random_range(600..=3000),
            }
        })
        .collect();

    // latent weekly home level, with `lag` warm-up weeks in front
    let lag = config.coupling_lag;
    let step = normal(config.mobility_step);
    let mut latent = Vec::with_capacity(lag + config.n_weeks);
    latent.push(rng.random_range(0.2..0.4));
    for _ in 1..lag + config.n_weeks {
        let prev = *latent.last().unwrap();
        latent.push(reflect(prev + step.sample(&mut rng)));
    }

    let death_noise = normal(config.death_noise);
    let weekly_deaths: Vec<u64> = (0..config.n_weeks)
        .map(|w| {
            let driver = latent[w];
            let d = config.death_baseline
                + config.coupling_strength * driver
                + death_noise.sample(&mut rng);
            d.round().max(0.0) as u64
        })
        .collect();
    let latent_home = latent[lag..].to_vec();

    let offsets: Vec<f64> = ids.iter().map(|_| normal(0.03).sample(&mut rng)).collect();
    let jitter = normal(config.daily_noise);
    let distance = Normal::new(3000f64.ln(), 0.5).unwrap();
    let time_home_means: Vec<(f64, f64)> = demographics
        .iter()
        .map(|d| {
            let shares = d.race_fractions.as_array();
            (
                logistic(published::RACE_PRE.linear_predictor(&shares)),
                logistic(published::RACE_POST.linear_predictor(&shares)),
            )
        })
        .collect();

    let mut mobility = Vec::with_capacity(config.n_cbgs * config.n_days());
    for day in 0..config.n_days() {
        let date = config.start_date + Days::new(day as u64);
        let h = latent_home[day / 7];
        for (c, id) in ids.iter().enumerate() {
            let devices = rng.random_range(config.min_devices..=config.max_devices);
            let p = (h + offsets[c] + jitter.sample(&mut rng)).clamp(0.01, 0.99);
            let home = Binomial::new(devices, p).unwrap().sample(&mut rng);
            let mu = if date < config.intervention_date {
                time_home_means[c].0
            } else {
                time_home_means[c].1
            };
            let time_home = Beta::new(mu * TIME_HOME_PRECISION, (1.0 - mu) * TIME_HOME_PRECISION)
                .unwrap()
                .sample(&mut rng);
            let movers = devices - home;
            let mut flows = BTreeMap::new();
            let self_visits = (movers as f64 * rng.random_range(0.2..0.5)).round() as u64;
            if self_visits > 0 {
                flows.insert(id.clone(), self_visits);
            }
            for _ in 0..rng.random_range(0..=2usize) {
                let dest = &ids[rng.random_range(0..ids.len())];
                *flows.entry(dest.clone()).or_insert(0) += rng.random_range(1..=30u64);
            }
            mobility.push(DailyCbgRecord {
                cbg_id: id.clone(),
                date,
                device_count: devices,
                completely_home_count: home,
                median_pct_time_home: time_home,
                median_distance_from_home: distance.sample(&mut rng).exp().round(),
                destination_flows: flows,
            });
        }
    }

    // cumulative series starts the day before the first mobility day so the
    // first week has a baseline
    let mut fatalities = Vec::with_capacity(config.n_days() + 1);
    let mut cumulative = 0u64;
    fatalities.push(FatalityRecord {
        date: config.start_date - Days::new(1),
        cumulative_deaths: 0,
    });
    for (w, &total) in weekly_deaths.iter().enumerate() {
        let base = total / 7;
        let extra = total % 7;
        for d in 0..7u64 {
            cumulative += base + u64::from(d < extra);
            fatalities.push(FatalityRecord {
                date: config.start_date + Days::new(7 * w as u64 + d),
                cumulative_deaths: cumulative,
            });
        }
    }

    Ok(SynthDataset {
        mobility,
        fatalities,
        demographics,
        latent_home,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{read_demographics, read_fatalities, read_mobility, weekly_aggregate};
    use super::super::{write_demographics, write_fatalities, write_mobility};
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_cbgs: 4,
            n_weeks: 6,
            seed: 11,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = synthesize_dataset(&small()).unwrap();
        let b = synthesize_dataset(&small()).unwrap();
        assert_eq!(a, b);
        let c = synthesize_dataset(&SynthConfig {
            seed: 12,
            ..small()
        })
        .unwrap();
        assert_ne!(a.mobility, c.mobility);
    }

    #[test]
    fn records_respect_invariants() {
        let d = synthesize_dataset(&small()).unwrap();
        assert_eq!(d.mobility.len(), 4 * 42);
        for r in &d.mobility {
            r.validate().unwrap();
        }
        for r in &d.demographics {
            r.validate().unwrap();
        }
        assert!(d
            .fatalities
            .windows(2)
            .all(|w| w[0].cumulative_deaths <= w[1].cumulative_deaths));
    }

    #[test]
    fn weekly_deaths_follow_lagged_mobility() {
        let cfg = SynthConfig {
            death_noise: 0.0,
            ..small()
        };
        let d = synthesize_dataset(&cfg).unwrap();
        let weekly = weekly_aggregate(&d.mobility, &d.fatalities, None).unwrap();
        assert_eq!(weekly.len(), cfg.n_weeks);
        for w in cfg.coupling_lag..cfg.n_weeks {
            let expected = (cfg.death_baseline
                + cfg.coupling_strength * d.latent_home[w - cfg.coupling_lag])
                .round()
                .max(0.0);
            assert_eq!(weekly.deaths[w], expected);
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = synthesize_dataset(&small()).unwrap();
        let mut buf = Vec::new();
        write_mobility(&mut buf, &d.mobility).unwrap();
        assert_eq!(read_mobility(buf.as_slice()).unwrap(), d.mobility);
        buf.clear();
        write_fatalities(&mut buf, &d.fatalities).unwrap();
        assert_eq!(read_fatalities(buf.as_slice()).unwrap(), d.fatalities);
        buf.clear();
        write_demographics(&mut buf, &d.demographics).unwrap();
        assert_eq!(read_demographics(buf.as_slice()).unwrap(), d.demographics);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synthesize_dataset(&SynthConfig {
            n_cbgs: 0,
            ..small()
        })
        .is_err());
        assert!(synthesize_dataset(&SynthConfig {
            min_devices: 0,
            ..small()
        })
        .is_err());
        assert!(synthesize_dataset(&SynthConfig {
            death_noise: -1.0,
            ..small()
        })
        .is_err());
    }
}
