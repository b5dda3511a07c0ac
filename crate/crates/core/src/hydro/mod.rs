//! Time-series containers, the forecast archive, and the calendar logic
//! shared by every other module.

mod aggregate;
mod archive;
mod calendar;
mod pairs;
mod point;
mod series;
mod threshold;

pub use aggregate::{aggregate_to_daily, DailyAggregate, SUBDAILY_PER_DAY};
pub use archive::ForecastArchive;
pub use calendar::{classify_season, day_of_year, DateRange, Season, DAYS_PER_CLIM_YEAR};
pub use pairs::{align_pairs, Pair, PairSet};
pub use point::PointForecasts;
pub use series::{DailySeries, ForcingSeries};
pub use threshold::{flow_threshold, FlowCategory, FlowThresholds};
