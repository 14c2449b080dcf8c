//! The interaction classifier: parameters, forward pass, training loop and
//! checkpoints.

pub mod checkpoint;
mod forward;
mod params;
mod train;

pub use forward::{
    bce_loss, forward, forward_generic, label_aware_repr, label_aware_rows, loss_and_grad, predict, predict_row, score,
    score_points, ForwardInputs, Grads, LabelAwareRepr, BCE_CLAMP,
};
pub use params::{HyperIMParams, ModelConfig, EUCLIDEAN_INIT};
pub use train::{dataset_loss_and_p1, train, EpochRecord, Example, TrainConfig, TrainHistory};
