use chrono::{Datelike, NaiveDate};
use std::fmt;

/// Length of the day-of-year cycle; Feb 29 folds onto Feb 28.
pub const DAYS_PER_CLIM_YEAR: u32 = 365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Season {
    /// October through March.
    Cool,
    /// April through September.
    Warm,
}

impl Season {
    pub const ALL: [Season; 2] = [Season::Cool, Season::Warm];

    pub fn label(self) -> &'static str {
        match self {
            Season::Cool => "cool",
            Season::Warm => "warm",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Season of a forecast valid date.
pub fn classify_season(valid_date: NaiveDate) -> Season {
    match valid_date.month() {
        4..=9 => Season::Warm,
        _ => Season::Cool,
    }
}

/// Day of year in `1..=365`, counted on a non-leap calendar.
///
/// In leap years Feb 29 shares day 59 with Feb 28 and later dates shift
/// back by one, so every calendar day maps onto the same 365-day cycle.
pub fn day_of_year(date: NaiveDate) -> u32 {
    let ordinal = date.ordinal();
    if date.leap_year() && ordinal >= 60 {
        ordinal - 1
    } else {
        ordinal
    }
}

/// Inclusive span of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        assert!(start <= end, "date range start {start} after end {end}");
        DateRange { start, end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}
