use std::path::PathBuf;
use std::str::FromStr;

use chrono::NaiveDate;
use mobstat::{Error, Result};

/// Inclusive date range written `START:END`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn overlaps(&self, other: &Period) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl FromStr for Period {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("period `{s}` must be START:END"))?;
        let parse = |d: &str| {
            NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
                .map_err(|e| format!("bad date `{d}` in period: {e}"))
        };
        let (start, end) = (parse(a)?, parse(b)?);
        if end < start {
            return Err(format!("period `{s}` ends before it starts"));
        }
        Ok(Period { start, end })
    }
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// Everything a pipeline run may need; subcommands fill the parts they use.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub mobility: Option<PathBuf>,
    pub fatalities: Option<PathBuf>,
    pub demographics: Option<PathBuf>,
    pub anchor: Option<NaiveDate>,
    pub max_lag: usize,
    pub pre_period: Option<Period>,
    pub post_period: Option<Period>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let (Some(pre), Some(post)) = (&self.pre_period, &self.post_period) {
            if pre.overlaps(post) {
                return Err(Error::Config(format!(
                    "pre-period {pre} and post-period {post} overlap"
                )));
            }
        }
        Ok(())
    }

    pub fn require<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
        path.as_ref()
            .ok_or_else(|| Error::Config(format!("missing required input --{flag}")))
    }
}

/// A population given either as a comma-separated covariate vector or as a
/// named homogeneous block. `covariate_names` excludes the intercept.
pub fn parse_population<S: AsRef<str>>(
    spec: &str,
    covariate_names: &[S],
    income: Option<f64>,
) -> Result<Vec<f64>> {
    let arity = covariate_names.len();
    if spec.contains(',') || spec.parse::<f64>().is_ok() {
        let v = spec
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number `{t}` in population `{spec}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != arity {
            return Err(Error::Arity {
                expected: arity,
                got: v.len(),
            });
        }
        return Ok(v);
    }
    let name = spec.to_ascii_lowercase().replace(['+', '-'], "_");
    if arity == 1 && covariate_names[0].as_ref() == "older50" {
        return match name.as_str() {
            "older50" => Ok(vec![1.0]),
            "younger50" => Ok(vec![0.0]),
            _ => Err(Error::Config(format!(
                "unknown population `{spec}` for the age model (use older50 or younger50)"
            ))),
        };
    }
    let race = ["white", "black", "hispanic", "asian", "natives_others"];
    let i = race.iter().position(|r| *r == name).ok_or_else(|| {
        Error::Config(format!(
            "unknown population `{spec}` (use one of {} or a covariate vector)",
            race.join(", ")
        ))
    })?;
    if arity < 5
        || covariate_names[..5]
            .iter()
            .zip(race)
            .any(|(a, b)| a.as_ref() != b)
    {
        return Err(Error::Config(format!(
            "named population `{spec}` needs a race model; give a covariate vector instead"
        )));
    }
    let mut v = vec![0.0; 5];
    v[i] = 1.0;
    if arity == 6 && covariate_names[5].as_ref() == "median_income" {
        let income = income.ok_or_else(|| {
            Error::Config("the race-income model needs --income for named populations".into())
        })?;
        v.push(income);
    }
    Ok(v)
}
