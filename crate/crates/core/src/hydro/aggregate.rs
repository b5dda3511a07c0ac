use chrono::{NaiveDate, NaiveDateTime, TimeDelta};

use super::DailySeries;
use crate::{Error, Result};

/// Sub-daily values per complete day at 6-hour spacing.
pub const SUBDAILY_PER_DAY: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyAggregate {
    pub series: DailySeries,
    /// Days with fewer than four sub-daily values, left out of `series`.
    pub excluded: Vec<NaiveDate>,
}

/// Average 6-hourly values into daily means.
///
/// Timestamps must be strictly increasing at exactly 6-hour steps. Only
/// days holding all four values are kept; with uniform spacing the partial
/// days can only sit at either end, so the output stays contiguous.
pub fn aggregate_to_daily(subdaily: &[(NaiveDateTime, f64)]) -> Result<DailyAggregate> {
    let step = TimeDelta::hours(6);
    for pair in subdaily.windows(2) {
        if pair[1].0 - pair[0].0 != step {
            return Err(Error::format(format!(
                "sub-daily timestamps {} and {} are not 6 hours apart",
                pair[0].0, pair[1].0
            )));
        }
    }
    if let Some((ts, v)) = subdaily.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::format(format!("non-finite value {v} at {ts}")));
    }

    let mut days: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for &(ts, v) in subdaily {
        match days.last_mut() {
            Some((date, sum, count)) if *date == ts.date() => {
                *sum += v;
                *count += 1;
            }
            _ => days.push((ts.date(), v, 1)),
        }
    }

    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (date, sum, count) in days {
        if count == SUBDAILY_PER_DAY {
            kept.push((date, sum / SUBDAILY_PER_DAY as f64));
        } else {
            excluded.push(date);
        }
    }

    let series = match kept.first() {
        Some(&(start, _)) => DailySeries::from_values(start, kept.iter().map(|(_, v)| *v).collect())?,
        None => DailySeries::from_values(subdaily.first().map_or(NaiveDate::MIN, |(ts, _)| ts.date()), Vec::new())?,
    };
    Ok(DailyAggregate { series, excluded })
}
