use chrono::NaiveDate;

use super::{DailySeries, ForecastArchive};
use crate::MEMBERS;

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub issue: NaiveDate,
    pub valid: NaiveDate,
    pub ensemble: [f64; MEMBERS],
    pub obs: f64,
}

impl Pair {
    pub fn ensemble_mean(&self) -> f64 {
        self.ensemble.iter().sum::<f64>() / MEMBERS as f64
    }
}

/// Complete forecast–observation triples for one lead time.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub lead: u32,
    pub pairs: Vec<Pair>,
    /// Issue dates dropped for a missing member or observation.
    pub skipped: usize,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ensemble_means(&self) -> Vec<f64> {
        self.pairs.iter().map(Pair::ensemble_mean).collect()
    }

    pub fn observations(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.obs).collect()
    }

    /// Pairs whose valid date passes `keep`, skip count carried over.
    pub fn filter(&self, keep: impl Fn(&Pair) -> bool) -> PairSet {
        PairSet {
            lead: self.lead,
            pairs: self.pairs.iter().filter(|p| keep(p)).cloned().collect(),
            skipped: self.skipped,
        }
    }
}

/// One triple per issue date whose 11 members and verifying observation
/// all exist, in valid-date order.
pub fn align_pairs(archive: &ForecastArchive, obs: &DailySeries, lead: u32) -> PairSet {
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (idx, &issue) in archive.issue_dates().iter().enumerate() {
        let valid = ForecastArchive::valid_date(issue, lead);
        match (archive.ensemble_at(idx, lead), obs.get(valid)) {
            (Some(ensemble), Some(y)) => pairs.push(Pair {
                issue,
                valid,
                ensemble,
                obs: y,
            }),
            _ => skipped += 1,
        }
    }
    PairSet {
        lead,
        pairs,
        skipped,
    }
}
