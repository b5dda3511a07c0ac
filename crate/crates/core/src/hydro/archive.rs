use chrono::{Days, NaiveDate};

use crate::{Error, Result, MAX_LEAD, MEMBERS};

const LEADS: usize = MAX_LEAD as usize;

/// Ensemble forecasts indexed by (issue date, lead day 1..=7, member 0..=10).
///
/// Cells not yet filled are missing. Member 0 is the unperturbed control.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastArchive {
    issue_dates: Vec<NaiveDate>,
    cells: Vec<Option<f64>>,
}

impl ForecastArchive {
    /// Archive with every cell missing. Issue dates are sorted and deduplicated.
    pub fn empty(mut issue_dates: Vec<NaiveDate>) -> Self {
        issue_dates.sort_unstable();
        issue_dates.dedup();
        let n = issue_dates.len() * LEADS * MEMBERS;
        ForecastArchive {
            issue_dates,
            cells: vec![None; n],
        }
    }

    /// Archive over every day from `first` to `last` inclusive.
    pub fn daily(first: NaiveDate, last: NaiveDate) -> Self {
        Self::empty(first.iter_days().take_while(|d| *d <= last).collect())
    }

    pub fn issue_dates(&self) -> &[NaiveDate] {
        &self.issue_dates
    }

    pub fn is_empty(&self) -> bool {
        self.issue_dates.is_empty()
    }

    pub fn issue_index(&self, issue: NaiveDate) -> Option<usize> {
        self.issue_dates.binary_search(&issue).ok()
    }

    fn offset(issue_idx: usize, lead: u32, member: usize) -> usize {
        debug_assert!((1..=MAX_LEAD).contains(&lead) && member < MEMBERS);
        (issue_idx * LEADS + (lead as usize - 1)) * MEMBERS + member
    }

    fn check_cell(lead: u32, member: usize) -> Result<()> {
        if !(1..=MAX_LEAD).contains(&lead) {
            return Err(Error::input(format!("lead {lead} outside 1..={MAX_LEAD}")));
        }
        if member >= MEMBERS {
            return Err(Error::input(format!("member {member} outside 0..={}", MEMBERS - 1)));
        }
        Ok(())
    }

    /// Store a value, replacing any previous one.
    pub fn set(&mut self, issue: NaiveDate, lead: u32, member: usize, value: f64) -> Result<()> {
        Self::check_cell(lead, member)?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::input(format!(
                "forecast value {value} at ({issue}, lead {lead}, member {member}) is not a finite non-negative number"
            )));
        }
        let idx = self
            .issue_index(issue)
            .ok_or_else(|| Error::input(format!("issue date {issue} not in archive")))?;
        self.cells[Self::offset(idx, lead, member)] = Some(value);
        Ok(())
    }

    /// Store a value, failing if the cell is already filled.
    pub fn insert(&mut self, issue: NaiveDate, lead: u32, member: usize, value: f64) -> Result<()> {
        if self.get(issue, lead, member).is_some() {
            return Err(Error::format(format!(
                "duplicate forecast cell (issue {issue}, lead {lead}, member {member})"
            )));
        }
        self.set(issue, lead, member, value)
    }

    pub fn clear(&mut self, issue: NaiveDate, lead: u32, member: usize) {
        if let Some(idx) = self.issue_index(issue) {
            self.cells[Self::offset(idx, lead, member)] = None;
        }
    }

    pub fn get(&self, issue: NaiveDate, lead: u32, member: usize) -> Option<f64> {
        if !(1..=MAX_LEAD).contains(&lead) || member >= MEMBERS {
            return None;
        }
        let idx = self.issue_index(issue)?;
        self.cells[Self::offset(idx, lead, member)]
    }

    pub fn get_at(&self, issue_idx: usize, lead: u32, member: usize) -> Option<f64> {
        self.cells[Self::offset(issue_idx, lead, member)]
    }

    /// All members for one (issue, lead), or `None` if any member is missing.
    pub fn ensemble(&self, issue: NaiveDate, lead: u32) -> Option<[f64; MEMBERS]> {
        let idx = self.issue_index(issue)?;
        self.ensemble_at(idx, lead)
    }

    pub fn ensemble_at(&self, issue_idx: usize, lead: u32) -> Option<[f64; MEMBERS]> {
        let base = Self::offset(issue_idx, lead, 0);
        let mut out = [0.0; MEMBERS];
        for (slot, cell) in out.iter_mut().zip(&self.cells[base..base + MEMBERS]) {
            *slot = (*cell)?;
        }
        Some(out)
    }

    pub fn valid_date(issue: NaiveDate, lead: u32) -> NaiveDate {
        issue + Days::new(u64::from(lead))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }

    /// Present cells as `(issue, lead, member, value)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, u32, usize, f64)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(k, cell)| {
            let v = (*cell)?;
            let member = k % MEMBERS;
            let lead = (k / MEMBERS) % LEADS + 1;
            let issue = self.issue_dates[k / (MEMBERS * LEADS)];
            Some((issue, lead as u32, member, v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn cell_addressing() {
        let mut a = ForecastArchive::daily(d(2010, 1, 1), d(2010, 1, 3));
        assert_eq!(a.cell_count(), 3 * 77);
        a.set(d(2010, 1, 2), 7, 10, 4.5).unwrap();
        assert_eq!(a.get(d(2010, 1, 2), 7, 10), Some(4.5));
        assert_eq!(a.get(d(2010, 1, 2), 7, 9), None);
        let cells: Vec<_> = a.iter().collect();
        assert_eq!(cells, vec![(d(2010, 1, 2), 7, 10, 4.5)]);
    }

    #[test]
    fn rejects_out_of_range_cells() {
        let mut a = ForecastArchive::daily(d(2010, 1, 1), d(2010, 1, 1));
        assert!(a.set(d(2010, 1, 1), 0, 0, 1.0).is_err());
        assert!(a.set(d(2010, 1, 1), 8, 0, 1.0).is_err());
        assert!(a.set(d(2010, 1, 1), 1, 11, 1.0).is_err());
        assert!(a.set(d(2010, 1, 1), 1, 0, -1.0).is_err());
        assert!(a.set(d(2010, 1, 2), 1, 0, 1.0).is_err());
        a.insert(d(2010, 1, 1), 1, 0, 1.0).unwrap();
        assert!(matches!(a.insert(d(2010, 1, 1), 1, 0, 2.0), Err(Error::Format(_))));
    }

    #[test]
    fn ensemble_requires_all_members() {
        let mut a = ForecastArchive::daily(d(2010, 1, 1), d(2010, 1, 1));
        for m in 0..MEMBERS - 1 {
            a.set(d(2010, 1, 1), 3, m, m as f64).unwrap();
        }
        assert!(a.ensemble(d(2010, 1, 1), 3).is_none());
        a.set(d(2010, 1, 1), 3, 10, 10.0).unwrap();
        let ens = a.ensemble(d(2010, 1, 1), 3).unwrap();
        assert_eq!(ens[10], 10.0);
        assert_eq!(ens[0], 0.0);
    }
}
