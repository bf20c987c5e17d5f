//! Single-layer LSTM and GRU forecasters with a scalar linear head, trained
//! by backpropagation through time.

mod cell;
mod params;
mod train;

pub use cell::{
    forward, gru_cell_step, loss_and_gradients, lstm_cell_step, GruCache, LstmCache,
};
pub use params::{CellKind, RnnParams};
pub use train::{train, Checkpoint, EpochRecord, RnnSpec, TrainedModel};
