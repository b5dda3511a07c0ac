use chrono::{Days, NaiveDate};

use super::DateRange;
use crate::{Error, Result};

/// Daily values on a contiguous calendar index.
///
/// Every day between `start` and the last day has a slot; a slot is `None`
/// when the value is missing. Present values are finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    start: NaiveDate,
    values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<Option<f64>>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::input(format!(
                        "value {v} on {} is not a finite non-negative number",
                        start + Days::new(i as u64)
                    )));
                }
            }
        }
        Ok(DailySeries { start, values })
    }

    /// Series with every day present.
    pub fn from_values(start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        Self::new(start, values.into_iter().map(Some).collect())
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last day of the index; equals `start` for an empty series.
    pub fn end(&self) -> NaiveDate {
        self.date_at(self.values.len().saturating_sub(1))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).and_then(|i| self.values[i])
    }

    pub fn slots(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Present `(date, value)` pairs in date order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (self.date_at(i), v)))
    }

    pub fn present_values(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn missing_dates(&self) -> Vec<NaiveDate> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| self.date_at(i))
            .collect()
    }

    pub fn range(&self) -> Option<DateRange> {
        (!self.is_empty()).then(|| DateRange::new(self.start, self.end()))
    }

    /// Copy of the days inside `range`, clipped to the series coverage.
    pub fn subset(&self, range: DateRange) -> DailySeries {
        let first = range.start.max(self.start);
        let values = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| range.contains(self.date_at(*i)))
            .map(|(_, v)| *v)
            .collect();
        DailySeries {
            start: first,
            values,
        }
    }
}

/// Observed meteorological forcing: a precipitation proxy (mm/day) and a
/// temperature proxy (°C) on one contiguous daily index.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSeries {
    start: NaiveDate,
    precip: Vec<f64>,
    temperature: Vec<f64>,
}

impl ForcingSeries {
    pub fn new(start: NaiveDate, precip: Vec<f64>, temperature: Vec<f64>) -> Result<Self> {
        if precip.len() != temperature.len() {
            return Err(Error::input(format!(
                "forcing columns differ in length ({} precip vs {} temperature)",
                precip.len(),
                temperature.len()
            )));
        }
        if let Some(p) = precip.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::input(format!("precipitation {p} is not finite and non-negative")));
        }
        if let Some(t) = temperature.iter().find(|t| !t.is_finite()) {
            return Err(Error::input(format!("temperature {t} is not finite")));
        }
        Ok(ForcingSeries {
            start,
            precip,
            temperature,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn len(&self) -> usize {
        self.precip.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precip.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.precip.len()).then_some(offset as usize)
    }

    pub fn precip(&self) -> &[f64] {
        &self.precip
    }

    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }
}
