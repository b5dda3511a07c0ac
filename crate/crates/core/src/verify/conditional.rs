use std::fmt;

use chrono::NaiveDate;

use super::{
    brier_score, brier_skill_score, exceedance_probability, mean, nse, pbias, reliability_diagram, rmse,
    ProbForecastSet, ReliabilityCurve,
};
use crate::baselines::{climatology_prob_forecast, DayOfYearClimatology};
use crate::hydro::{classify_season, DailySeries, DateRange, FlowCategory, FlowThresholds, ForecastArchive, PointForecasts, Season};
use crate::{Error, Result, MAX_LEAD};

/// Forecasts of one verified system.
#[derive(Debug, Clone, Copy)]
pub enum SystemForecasts<'a> {
    Ensemble(&'a ForecastArchive),
    Point(&'a PointForecasts),
    /// Pooled day-of-year sample at the valid date.
    Climatology(&'a DayOfYearClimatology),
}

#[derive(Debug, Clone, Copy)]
pub struct System<'a> {
    pub name: &'a str,
    pub forecasts: SystemForecasts<'a>,
}

/// A system's forecast for one (issue, lead), reduced to what the
/// metrics need.
#[derive(Debug, Clone)]
enum Prediction<'a> {
    Members(Vec<f64>),
    Climatology(&'a DayOfYearClimatology, NaiveDate),
}

impl Prediction<'_> {
    fn mean(&self) -> f64 {
        match self {
            Prediction::Members(m) => mean(m),
            Prediction::Climatology(c, valid) => c.mean(*valid),
        }
    }

    fn prob(&self, z: f64) -> f64 {
        match self {
            Prediction::Members(m) => exceedance_probability(m, z),
            Prediction::Climatology(c, valid) => climatology_prob_forecast(c, *valid, z),
        }
    }
}

impl<'a> SystemForecasts<'a> {
    fn predict(&self, issue: NaiveDate, lead: u32) -> Option<Prediction<'a>> {
        match *self {
            SystemForecasts::Ensemble(a) => a.ensemble(issue, lead).map(|e| Prediction::Members(e.to_vec())),
            SystemForecasts::Point(p) => p.get(issue, lead).map(|v| Prediction::Members(vec![v])),
            SystemForecasts::Climatology(c) => Some(Prediction::Climatology(c, ForecastArchive::valid_date(issue, lead))),
        }
    }

    /// Issue dates this system can forecast, when it has a finite list.
    fn issue_dates(&self) -> Option<Vec<NaiveDate>> {
        match self {
            SystemForecasts::Ensemble(a) => Some(a.issue_dates().to_vec()),
            SystemForecasts::Point(p) => {
                let mut d: Vec<NaiveDate> = p.iter().map(|(i, _, _)| i).collect();
                d.dedup();
                Some(d)
            }
            SystemForecasts::Climatology(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SeasonFilter {
    All,
    Only(Season),
}

impl SeasonFilter {
    pub const ALL: [SeasonFilter; 3] = [SeasonFilter::All, SeasonFilter::Only(Season::Cool), SeasonFilter::Only(Season::Warm)];

    pub fn label(self) -> &'static str {
        match self {
            SeasonFilter::All => "all",
            SeasonFilter::Only(s) => s.label(),
        }
    }

    pub fn admits(self, valid: NaiveDate) -> bool {
        match self {
            SeasonFilter::All => true,
            SeasonFilter::Only(s) => classify_season(valid) == s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Nse,
    Rmse,
    Pbias,
    Bs,
    Bss,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Nse => "nse",
            Metric::Rmse => "rmse",
            Metric::Pbias => "pbias",
            Metric::Bs => "bs",
            Metric::Bss => "bss",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub system: String,
    pub lead: u32,
    pub season: &'static str,
    /// `"all"` for the deterministic scores, else the event's category.
    pub category: &'static str,
    pub metric: Metric,
    pub value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityRow {
    pub system: String,
    pub lead: u32,
    pub category: &'static str,
    pub curve: ReliabilityCurve,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub rows: Vec<MetricRow>,
    pub reliability: Vec<ReliabilityRow>,
}

impl VerificationReport {
    pub fn get(&self, system: &str, lead: u32, season: &str, category: &str, metric: Metric) -> Option<&MetricRow> {
        self.rows.iter().find(|r| {
            r.system == system && r.lead == lead && r.season == season && r.category == category && r.metric == metric
        })
    }

    pub fn systems(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.rows.iter().map(|r| r.system.as_str()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub leads: Vec<u32>,
    /// Valid dates verified.
    pub range: DateRange,
    pub bins: usize,
}

/// One verified (issue, lead) shared by every system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifiedCase {
    pub issue: NaiveDate,
    pub valid: NaiveDate,
    pub obs: f64,
}

/// Cases at `lead` with an observation in range and a forecast from
/// every system, in issue order.
pub fn common_cases(systems: &[System<'_>], obs: &DailySeries, lead: u32, range: DateRange) -> Vec<VerifiedCase> {
    let mut candidates: Option<Vec<NaiveDate>> = None;
    for s in systems {
        if let Some(dates) = s.forecasts.issue_dates() {
            candidates = Some(match candidates {
                None => dates,
                Some(prev) => prev.into_iter().filter(|d| dates.binary_search(d).is_ok()).collect(),
            });
        }
    }
    let issues = candidates.unwrap_or_else(|| {
        let first = range.start - chrono::Days::new(u64::from(lead));
        (0..range.days()).map(|k| first + chrono::Days::new(k as u64)).collect()
    });
    issues
        .into_iter()
        .filter_map(|issue| {
            let valid = ForecastArchive::valid_date(issue, lead);
            if !range.contains(valid) {
                return None;
            }
            let obs = obs.get(valid)?;
            systems
                .iter()
                .all(|s| s.forecasts.predict(issue, lead).is_some())
                .then_some(VerifiedCase { issue, valid, obs })
        })
        .collect()
}

/// Event outcomes for `z` over `cases`.
pub fn outcome_flags(cases: &[VerifiedCase], z: f64) -> Vec<bool> {
    cases.iter().map(|c| c.obs > z).collect()
}

/// Scores every system per (lead, season, category) on a common set of
/// cases per lead. Deterministic scores use ensemble means and carry the
/// category `"all"`; Brier scores are per flow category, with skill
/// measured against the climatology probabilities at the same valid
/// dates. Reliability curves pool all seasons.
pub fn conditional_verify(
    systems: &[System<'_>],
    obs: &DailySeries,
    clim: &DayOfYearClimatology,
    thresholds: &FlowThresholds,
    settings: &VerifySettings,
) -> Result<VerificationReport> {
    if let Some(&bad) = settings.leads.iter().find(|l| !(1..=MAX_LEAD).contains(*l)) {
        return Err(Error::input(format!("lead {bad} outside 1..={MAX_LEAD}")));
    }
    let mut report = VerificationReport::default();
    let reference = SystemForecasts::Climatology(clim);

    for &lead in &settings.leads {
        let cases = common_cases(systems, obs, lead, settings.range);
        for system in systems {
            let preds: Vec<Prediction<'_>> = cases
                .iter()
                .map(|c| system.forecasts.predict(c.issue, lead).expect("common case"))
                .collect();
            let ref_preds: Vec<Prediction<'_>> =
                cases.iter().map(|c| reference.predict(c.issue, lead).expect("always")).collect();

            for season in SeasonFilter::ALL {
                let idx: Vec<usize> = (0..cases.len()).filter(|&k| season.admits(cases[k].valid)).collect();
                if idx.is_empty() {
                    log::warn!("{}: no cases at lead {lead} in season {}", system.name, season.label());
                    continue;
                }
                let f: Vec<f64> = idx.iter().map(|&k| preds[k].mean()).collect();
                let y: Vec<f64> = idx.iter().map(|&k| cases[k].obs).collect();
                let mut push = |category: &'static str, metric: Metric, value: Result<f64>| match value {
                    Ok(value) => report.rows.push(MetricRow {
                        system: system.name.to_string(),
                        lead,
                        season: season.label(),
                        category,
                        metric,
                        value,
                        n: idx.len(),
                    }),
                    Err(e) => log::warn!(
                        "{}: {metric} omitted at lead {lead}, season {}, category {category}: {e}",
                        system.name,
                        season.label()
                    ),
                };
                push("all", Metric::Nse, nse(&f, &y));
                push("all", Metric::Rmse, rmse(&f, &y));
                push("all", Metric::Pbias, pbias(&f, &y));

                for category in [FlowCategory::LowModerate, FlowCategory::High] {
                    let z = thresholds.get(category);
                    let main = ProbForecastSet::from_pairs(idx.iter().map(|&k| (preds[k].prob(z), cases[k].obs > z)))?;
                    let refs =
                        ProbForecastSet::from_pairs(idx.iter().map(|&k| (ref_preds[k].prob(z), cases[k].obs > z)))?;
                    push(category.label(), Metric::Bs, brier_score(&main));
                    push(category.label(), Metric::Bss, brier_skill_score(&main, &refs));
                    if season == SeasonFilter::All {
                        report.reliability.push(ReliabilityRow {
                            system: system.name.to_string(),
                            lead,
                            category: category.label(),
                            curve: reliability_diagram(&main, settings.bins)?,
                        });
                    }
                }
            }
        }
    }
    report.rows.sort_by(|a, b| {
        (a.system.as_str(), a.lead, a.season, a.category, a.metric.name())
            .cmp(&(b.system.as_str(), b.lead, b.season, b.category, b.metric.name()))
    });
    report
        .reliability
        .sort_by(|a, b| (a.system.as_str(), a.lead, a.category).cmp(&(b.system.as_str(), b.lead, b.category)));
    Ok(report)
}
