use chrono::NaiveDate;

use super::DayOfYearClimatology;
use crate::hydro::{DailySeries, ForecastArchive, PointForecasts};
use crate::{Error, Result, MAX_LEAD};

fn check_lead(lead: u32) -> Result<()> {
    if (1..=MAX_LEAD).contains(&lead) {
        Ok(())
    } else {
        Err(Error::input(format!("lead {lead} outside 1..={MAX_LEAD}")))
    }
}

fn issue_obs(obs: &DailySeries, issue_date: NaiveDate) -> Result<f64> {
    obs.get(issue_date)
        .ok_or_else(|| Error::input(format!("no observation on issue date {issue_date}")))
}

/// The issue-day observation, repeated at every lead.
pub fn simple_persistence(obs: &DailySeries, issue_date: NaiveDate, lead: u32) -> Result<f64> {
    check_lead(lead)?;
    issue_obs(obs, issue_date)
}

/// Climatological mean at the valid date plus the issue-day additive
/// anomaly, floored at zero.
pub fn anomaly_persistence(
    obs: &DailySeries,
    clim: &DayOfYearClimatology,
    issue_date: NaiveDate,
    lead: u32,
) -> Result<f64> {
    check_lead(lead)?;
    let observed = issue_obs(obs, issue_date)?;
    let valid = ForecastArchive::valid_date(issue_date, lead);
    // grouped so a flat climatology returns the observation bit for bit
    Ok((observed + (clim.mean(valid) - clim.mean(issue_date))).max(0.0))
}

/// Persistence forecasts for every issue date with an observation; the
/// anomaly variant is used when a climatology is supplied.
pub fn persistence_forecasts(
    obs: &DailySeries,
    issue_dates: &[NaiveDate],
    clim: Option<&DayOfYearClimatology>,
) -> Result<PointForecasts> {
    let mut out = PointForecasts::new();
    for &issue in issue_dates {
        if obs.get(issue).is_none() {
            continue;
        }
        for lead in 1..=MAX_LEAD {
            let v = match clim {
                Some(c) => anomaly_persistence(obs, c, issue, lead)?,
                None => simple_persistence(obs, issue, lead)?,
            };
            out.insert(issue, lead, v)?;
        }
    }
    Ok(out)
}
