//! Reference forecasters: day-of-year climatology, simple and anomaly
//! persistence, and an LSTM driven by forecast forcing.

mod climatology;
mod persistence;
mod standalone;

pub use climatology::{build_climatology, climatology_prob_forecast, DayOfYearClimatology, DEFAULT_WINDOW_DAYS};
pub use persistence::{anomaly_persistence, persistence_forecasts, simple_persistence};
pub use standalone::{
    issues_verifying_in, standalone_dataset, standalone_lstm_forecast, StandaloneForecast, STANDALONE_FEATURES,
};
