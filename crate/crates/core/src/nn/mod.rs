//! Single-layer LSTM with a linear readout, trained by backpropagation
//! through time with Adam on min–max scaled data.

mod adam;
mod gradcheck;
mod lstm;
mod model;
mod params;
mod scaler;
mod train;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use lstm::{backward_sequence, forward_sequence, lstm_cell_forward, CellCache, LstmState, SequenceCache};
pub use model::{LstmModel, TrainMeta, MODEL_MAGIC};
pub use params::{Gate, LstmParams};
pub use scaler::{scaler_fit, scaler_map, Direction, MinMax, ScalerParams};
pub use train::{train, Dataset, TrainConfig};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
