use std::collections::{BTreeMap, BTreeSet};

use chrono::{Days, NaiveDate};

use super::{DailyCbgRecord, FatalityRecord, WeeklyPair};
use crate::error::{Error, Result};

/// Device-weighted share of devices that stayed completely home, pooled
/// over every record passed in (normally one day's CBGs).
pub fn national_home_fraction(records: &[DailyCbgRecord]) -> Result<f64> {
    let (home, devices) = records.iter().fold((0u64, 0u64), |(h, d), r| {
        (h + r.completely_home_count, d + r.device_count)
    });
    if devices == 0 {
        return Err(Error::UndefinedDay);
    }
    Ok(home as f64 / devices as f64)
}

/// Cumulative count on `date`, carrying the last report forward.
fn cumulative_on(fatalities: &BTreeMap<NaiveDate, u64>, date: NaiveDate) -> Option<u64> {
    fatalities.range(..=date).next_back().map(|(_, c)| *c)
}

/// Aggregates daily records into consecutive 7-day weeks starting at
/// `anchor` (default: the first date present in both inputs).
///
/// Weekly deaths are the increase in cumulative deaths over the week: the
/// count on the week's last day minus the count on the previous week's last
/// day. For the first week the day before `anchor` is used when reported,
/// otherwise the anchor day itself. A trailing partial week is dropped.
pub fn weekly_aggregate(
    mobility: &[DailyCbgRecord],
    fatalities: &[FatalityRecord],
    anchor: Option<NaiveDate>,
) -> Result<WeeklyPair> {
    let mut pooled: BTreeMap<NaiveDate, (u64, u64)> = BTreeMap::new();
    for r in mobility {
        let e = pooled.entry(r.date).or_default();
        e.0 += r.completely_home_count;
        e.1 += r.device_count;
    }
    let cumulative: BTreeMap<NaiveDate, u64> = fatalities
        .iter()
        .map(|f| (f.date, f.cumulative_deaths))
        .collect();

    let (Some((&mob_first, _)), Some((&mob_last, _))) =
        (pooled.first_key_value(), pooled.last_key_value())
    else {
        return Err(Error::Aggregation("no mobility records".into()));
    };
    let (Some((&fat_first, _)), Some((&fat_last, _))) =
        (cumulative.first_key_value(), cumulative.last_key_value())
    else {
        return Err(Error::Aggregation("no fatality records".into()));
    };

    let anchor = match anchor {
        Some(a) => a,
        None => {
            let mob_dates: BTreeSet<_> = pooled.keys().collect();
            *cumulative
                .keys()
                .find(|d| mob_dates.contains(d))
                .ok_or_else(|| Error::Aggregation("inputs share no common date".into()))?
        }
    };
    if anchor < mob_first || anchor > mob_last {
        return Err(Error::Aggregation(format!(
            "anchor {anchor} outside mobility coverage {mob_first}..{mob_last}"
        )));
    }
    if anchor < fat_first || anchor > fat_last {
        return Err(Error::Aggregation(format!(
            "anchor {anchor} outside fatality coverage {fat_first}..{fat_last}"
        )));
    }

    let end = mob_last.min(fat_last);
    let n_weeks = ((end - anchor).num_days() + 1) as u64 / 7;

    let day_before = anchor.pred_opt().filter(|d| *d >= fat_first);
    let mut baseline = match day_before {
        Some(d) => cumulative_on(&cumulative, d),
        None => cumulative_on(&cumulative, anchor),
    }
    .expect("anchor is within fatality coverage");

    let mut week_start = Vec::with_capacity(n_weeks as usize);
    let mut h_us = Vec::with_capacity(n_weeks as usize);
    let mut deaths = Vec::with_capacity(n_weeks as usize);
    for w in 0..n_weeks {
        let start = anchor + Days::new(7 * w);
        let last = start + Days::new(6);
        let daily: Vec<f64> = pooled
            .range(start..=last)
            .filter(|(_, (_, dev))| *dev > 0)
            .map(|(_, (home, dev))| *home as f64 / *dev as f64)
            .collect();
        if daily.is_empty() {
            return Err(Error::EmptyWeek { week_start: start });
        }
        let cum_end = cumulative_on(&cumulative, last).expect("within coverage");
        week_start.push(start);
        h_us.push(daily.iter().sum::<f64>() / daily.len() as f64);
        deaths.push(cum_end.saturating_sub(baseline) as f64);
        baseline = cum_end;
    }
    WeeklyPair::new(week_start, h_us, deaths)
}
