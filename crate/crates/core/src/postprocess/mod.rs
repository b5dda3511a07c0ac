//! Statistical postprocessors: a bank of residual LSTMs (one per lead and
//! member) and ensemble-mean quantile regression.

mod quantile;
mod residual;

pub use quantile::{
    apply_quantile_regression, default_quantile_levels, fit_quantile, fit_quantile_regression, pinball, pinball_loss,
    QrOptions, QuantileFit, QuantileRegressionModel, MIN_QR_PAIRS,
};
pub use residual::{
    apply_residual_bank, fit_residual_bank, residual_dataset, CorrectedArchive, ResidualModelBank, Slice, SliceFit,
    BANK_MANIFEST,
};
