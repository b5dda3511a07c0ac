//! Deterministic and probabilistic verification scores and their
//! conditional evaluation by lead, season and flow category.

mod brier;
mod conditional;
mod metrics;

pub use brier::{brier_score, brier_skill_score, reliability_diagram, ProbForecastSet, ReliabilityBin, ReliabilityCurve};
pub use conditional::{
    common_cases, conditional_verify, outcome_flags, Metric, MetricRow, ReliabilityRow, SeasonFilter, System,
    SystemForecasts, VerificationReport, VerifiedCase, VerifySettings,
};
pub use metrics::{exceedance_probability, mean, nse, pbias, rmse};
