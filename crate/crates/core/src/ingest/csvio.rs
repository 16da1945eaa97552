use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use csv::StringRecord;

use super::{CbgDemographics, CbgId, DailyCbgRecord, FatalityRecord, RaceFractions, WeeklyPair};
use crate::error::{Error, Result};

const MOBILITY_COLUMNS: [&str; 7] = [
    "cbg_id",
    "date",
    "device_count",
    "completely_home_device_count",
    "median_pct_time_home",
    "median_distance_from_home",
    "destination_flows",
];
const FATALITY_COLUMNS: [&str; 2] = ["date", "cumulative_deaths"];
const DEMOGRAPHIC_COLUMNS: [&str; 9] = [
    "cbg_id",
    "white",
    "black",
    "hispanic",
    "asian",
    "natives_others",
    "older50",
    "median_income",
    "population",
];
const WEEKLY_COLUMNS: [&str; 3] = ["week_start", "h_us", "deaths"];

/// Maps required column names to their positions in the header.
struct Columns<const N: usize>([usize; N]);

impl<const N: usize> Columns<N> {
    fn locate(headers: &StringRecord, names: &[&str; N]) -> Result<Self> {
        let mut idx = [0; N];
        for (slot, name) in idx.iter_mut().zip(names) {
            *slot = headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::MissingColumn {
                    column: (*name).to_string(),
                })?;
        }
        Ok(Columns(idx))
    }
}

struct Row<'a> {
    record: &'a StringRecord,
    line: u64,
}

impl Row<'_> {
    fn raw(&self, idx: usize, name: &str) -> Result<&str> {
        self.record
            .get(idx)
            .map(str::trim)
            .ok_or_else(|| self.err(format!("missing value for `{name}`")))
    }

    fn parse<T: FromStr>(&self, idx: usize, name: &str) -> Result<T> {
        let raw = self.raw(idx, name)?;
        raw.parse()
            .map_err(|_| self.err(format!("cannot parse `{name}` from `{raw}`")))
    }

    fn date(&self, idx: usize, name: &str) -> Result<NaiveDate> {
        let raw = self.raw(idx, name)?;
        NaiveDate::parse_from_str(raw, "%Y-%m-%d")
            .map_err(|_| self.err(format!("`{name}` is not an ISO-8601 date: `{raw}`")))
    }

    fn cbg(&self, idx: usize) -> Result<CbgId> {
        CbgId::new(self.raw(idx, "cbg_id")?).map_err(|e| self.err(e.to_string()))
    }

    fn err(&self, message: String) -> Error {
        Error::Row {
            line: self.line,
            message,
        }
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input)
}

fn for_each_row<R: Read, const N: usize>(
    input: R,
    names: &[&str; N],
    mut f: impl FnMut(&Row<'_>, &[usize; N]) -> Result<()>,
) -> Result<()> {
    let mut rdr = reader(input);
    let cols = Columns::locate(rdr.headers()?, names)?;
    let mut record = StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        f(
            &Row {
                record: &record,
                line,
            },
            &cols.0,
        )?;
    }
    Ok(())
}

pub fn read_mobility<R: Read>(input: R) -> Result<Vec<DailyCbgRecord>> {
    let mut out = Vec::new();
    for_each_row(input, &MOBILITY_COLUMNS, |row, c| {
        let flows_raw = row.raw(c[6], "destination_flows")?;
        let flows: BTreeMap<CbgId, u64> = if flows_raw.is_empty() {
            BTreeMap::new()
        } else {
            serde_json::from_str(flows_raw)
                .map_err(|e| row.err(format!("bad destination_flows: {e}")))?
        };
        let rec = DailyCbgRecord {
            cbg_id: row.cbg(c[0])?,
            date: row.date(c[1], "date")?,
            device_count: row.parse(c[2], "device_count")?,
            completely_home_count: row.parse(c[3], "completely_home_device_count")?,
            median_pct_time_home: row.parse(c[4], "median_pct_time_home")?,
            median_distance_from_home: row.parse(c[5], "median_distance_from_home")?,
            destination_flows: flows,
        };
        rec.validate()
            .map_err(|e| row.err(format!("row rejected: {e}")))?;
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

/// Parses a mobility CSV. Any malformed row fails the whole file with its
/// line number.
pub fn parse_mobility_csv(path: impl AsRef<Path>) -> Result<Vec<DailyCbgRecord>> {
    read_mobility(BufReader::new(File::open(path)?))
}

/// Reads cumulative fatalities, sorted ascending by date.
pub fn read_fatalities<R: Read>(input: R) -> Result<Vec<FatalityRecord>> {
    let mut out = Vec::new();
    for_each_row(input, &FATALITY_COLUMNS, |row, c| {
        out.push(FatalityRecord {
            date: row.date(c[0], "date")?,
            cumulative_deaths: row.parse(c[1], "cumulative_deaths")?,
        });
        Ok(())
    })?;
    out.sort_by_key(|r| r.date);
    for w in out.windows(2) {
        if w[0].date == w[1].date {
            return Err(Error::DuplicateDate { date: w[1].date });
        }
        if w[1].cumulative_deaths < w[0].cumulative_deaths {
            return Err(Error::Monotonicity {
                date: w[1].date,
                previous: w[0].cumulative_deaths,
                current: w[1].cumulative_deaths,
            });
        }
    }
    Ok(out)
}

pub fn parse_fatalities_csv(path: impl AsRef<Path>) -> Result<Vec<FatalityRecord>> {
    read_fatalities(BufReader::new(File::open(path)?))
}

pub fn read_demographics<R: Read>(input: R) -> Result<Vec<CbgDemographics>> {
    let mut out = Vec::new();
    for_each_row(input, &DEMOGRAPHIC_COLUMNS, |row, c| {
        let shares = [
            row.parse(c[1], "white")?,
            row.parse(c[2], "black")?,
            row.parse(c[3], "hispanic")?,
            row.parse(c[4], "asian")?,
            row.parse(c[5], "natives_others")?,
        ];
        let rec = CbgDemographics {
            cbg_id: row.cbg(c[0])?,
            race_fractions: RaceFractions::from_array(shares),
            older50_fraction: row.parse(c[6], "older50")?,
            median_income: row.parse(c[7], "median_income")?,
            population: row.parse(c[8], "population")?,
        };
        rec.validate()
            .map_err(|e| row.err(format!("row rejected: {e}")))?;
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_demographics_csv(path: impl AsRef<Path>) -> Result<Vec<CbgDemographics>> {
    read_demographics(BufReader::new(File::open(path)?))
}

pub fn read_weekly<R: Read>(input: R) -> Result<WeeklyPair> {
    let (mut weeks, mut h, mut deaths) = (Vec::new(), Vec::new(), Vec::new());
    for_each_row(input, &WEEKLY_COLUMNS, |row, c| {
        weeks.push(row.date(c[0], "week_start")?);
        h.push(row.parse(c[1], "h_us")?);
        deaths.push(row.parse(c[2], "deaths")?);
        Ok(())
    })?;
    WeeklyPair::new(weeks, h, deaths)
}

pub fn read_weekly_csv(path: impl AsRef<Path>) -> Result<WeeklyPair> {
    read_weekly(BufReader::new(File::open(path)?))
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out)
}

pub fn write_mobility<W: Write>(out: W, records: &[DailyCbgRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(MOBILITY_COLUMNS)?;
    for r in records {
        w.write_record([
            r.cbg_id.to_string(),
            r.date.to_string(),
            r.device_count.to_string(),
            r.completely_home_count.to_string(),
            r.median_pct_time_home.to_string(),
            r.median_distance_from_home.to_string(),
            serde_json::to_string(&r.destination_flows)?,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mobility_csv(path: impl AsRef<Path>, records: &[DailyCbgRecord]) -> Result<()> {
    write_mobility(BufWriter::new(File::create(path)?), records)
}

pub fn write_fatalities<W: Write>(out: W, records: &[FatalityRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(FATALITY_COLUMNS)?;
    for r in records {
        w.write_record([r.date.to_string(), r.cumulative_deaths.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fatalities_csv(path: impl AsRef<Path>, records: &[FatalityRecord]) -> Result<()> {
    write_fatalities(BufWriter::new(File::create(path)?), records)
}

pub fn write_demographics<W: Write>(out: W, records: &[CbgDemographics]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(DEMOGRAPHIC_COLUMNS)?;
    for r in records {
        let s = r.race_fractions.as_array();
        w.write_record([
            r.cbg_id.to_string(),
            s[0].to_string(),
            s[1].to_string(),
            s[2].to_string(),
            s[3].to_string(),
            s[4].to_string(),
            r.older50_fraction.to_string(),
            r.median_income.to_string(),
            r.population.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_demographics_csv(path: impl AsRef<Path>, records: &[CbgDemographics]) -> Result<()> {
    write_demographics(BufWriter::new(File::create(path)?), records)
}

pub fn write_weekly<W: Write>(out: W, weekly: &WeeklyPair) -> Result<()> {
    let mut w = writer(out);
    w.write_record(WEEKLY_COLUMNS)?;
    for i in 0..weekly.len() {
        w.write_record([
            weekly.week_start[i].to_string(),
            weekly.h_us[i].to_string(),
            weekly.deaths[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_weekly_csv(path: impl AsRef<Path>, weekly: &WeeklyPair) -> Result<()> {
    write_weekly(BufWriter::new(File::create(path)?), weekly)
}
