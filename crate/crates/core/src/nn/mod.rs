//! From-scratch neural network core: LSTM cell and scans, BiLSTM layers,
//! dense softmax head, exact BPTT gradients, ADAM and gradient clipping.

pub mod adam;
pub mod lstm;
pub mod model;
pub mod ops;
pub mod params;

pub use adam::{adam_step, clip_gradients, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use lstm::{
    bilstm_forward, lstm_cell_forward, lstm_sequence_backward, lstm_sequence_forward,
    lstm_sequence_scan, CellState, Direction,
};
pub use model::{
    compute_gradients, evaluate_loss, model_backward, model_forward, model_infer, ForwardMode,
    ModelCache,
};
pub use ops::{
    cross_entropy_loss, dense_forward, dropout_mask, relu, softmax_columns, CE_EPS,
};
pub use params::{LstmLayerParams, ModelParams};
