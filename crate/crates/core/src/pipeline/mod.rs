//! Configuration, CSV ingest and emission, and the end-to-end experiment.

mod config;
pub mod format;
mod io;
mod output;
mod stages;

pub use config::{ExperimentConfig, InputPaths, Mode};
pub use io::{
    ingest_forcing, ingest_forecasts, ingest_observations, ingest_precip_forecasts, read_partial_forecasts,
    write_forcing, write_forecasts, write_observations, write_precip_forecasts, write_rows, IngestedSeries,
    FORCING_HEADER, FORECAST_HEADER, OBS_HEADER, PRECIP_FORECAST_HEADER, SUBDAILY_HEADER,
};
pub use output::StagedDir;
pub use stages::*;
