pub mod cnn;
pub mod dropout;
pub mod gru;
pub mod linear;
pub mod net;

pub use cnn::{cnn_encode, CnnEncoderParams};
pub use dropout::{dropout_apply, dropout_on_tape, DropoutSpec, Mode};
pub use gru::{bigru_run, bigru_states, gru_cell_detailed, gru_cell_step, gru_run, GruParams, GruStep};
pub use linear::Linear;
pub use net::{Encoder, EncoderConfig, NetConfig, NetOutput, Prediction, SentimentNet};
