//! Postprocessing and verification of ensemble streamflow forecasts.
//!
//! The crate is organized around the forecasting chain:
//!
//! - [`hydro`]: calendar-aware series, the forecast archive, seasons, flow
//!   thresholds and forecast/observation alignment.
//! - [`nn`]: a single-layer LSTM with linear readout, trained with
//!   backpropagation through time and Adam.
//! - [`baselines`]: climatology, simple and anomaly persistence, and the
//!   standalone LSTM forecaster driven by forcing.
//! - [`postprocess`]: the per-lead, per-member LSTM residual bank and the
//!   quantile-regression postprocessor.
//! - [`verify`]: NSE, RMSE, percent bias, Brier score and skill score,
//!   reliability diagrams, and conditional verification.
//! - [`synthetic`]: a seeded linear-reservoir catchment with a structurally
//!   biased 11-member forecast ensemble.
//! - [`pipeline`]: CSV ingestion, configuration and experiment orchestration.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod hydro;
pub mod nn;
pub mod pipeline;
pub mod postprocess;
pub mod seed;
pub mod synthetic;
pub mod verify;

pub use error::{Error, Result};

/// Number of ensemble members, member 0 being the unperturbed control.
pub const MEMBERS: usize = 11;
/// Longest forecast lead time in days.
pub const MAX_LEAD: u32 = 7;
