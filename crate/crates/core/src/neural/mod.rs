//! The learned sequence matcher.

mod adam;
mod checkpoint;
mod lstm;
mod model;
mod train;

pub use adam::AdamState;
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use lstm::{lstm_backward, lstm_forward, lstm_forward_batch, Gate, LstmCache, LstmParams};
pub use model::{
    argmax, causal_window, cross_entropy_loss, infer, model_backward, model_forward,
    model_forward_with_cache, softmax, traversal_inputs, ForwardCache, Gradients, HeadParams,
    SequenceModel,
};
pub use train::{train, EpochRecord, TrainConfig, TrainingCurves};
