use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::ForecastArchive;
use crate::{Error, Result, MAX_LEAD, MEMBERS};

/// Single-valued forecasts keyed by (issue date, lead).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointForecasts {
    values: BTreeMap<(NaiveDate, u32), f64>,
}

impl PointForecasts {
    pub fn new() -> Self {
        Self::default()
    }

    /// One member of an ensemble archive as a single-valued system.
    pub fn from_member(archive: &ForecastArchive, member: usize) -> Self {
        assert!(member < MEMBERS, "member {member} out of range");
        let values = archive
            .iter()
            .filter(|&(_, _, m, _)| m == member)
            .map(|(issue, lead, _, v)| ((issue, lead), v))
            .collect();
        PointForecasts { values }
    }

    pub fn insert(&mut self, issue: NaiveDate, lead: u32, value: f64) -> Result<()> {
        if !(1..=MAX_LEAD).contains(&lead) {
            return Err(Error::input(format!("lead {lead} outside 1..={MAX_LEAD}")));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::input(format!("forecast for {issue} lead {lead} is {value}")));
        }
        self.values.insert((issue, lead), value);
        Ok(())
    }

    pub fn get(&self, issue: NaiveDate, lead: u32) -> Option<f64> {
        self.values.get(&(issue, lead)).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, u32, f64)> + '_ {
        self.values.iter().map(|(&(i, l), &v)| (i, l, v))
    }
}
