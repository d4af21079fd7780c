//! Desk-scale substrate: seeded ReLU MLPs, synthetic blobs, forward passes
//! with activation capture, and SGD training checked against finite
//! differences.

mod data;
mod mlp;
pub mod rng;
mod train;

pub use data::{make_blobs, Dataset};
pub use mlp::{
    accuracy, accuracy_from_logits, argmax, capture_activations, forward, init_mlp, predictions, softmax_rows,
    ForwardPass,
};
pub use train::{
    all_coords, loss_and_gradients, mean_loss, numerical_gradient, train_sgd, EpochLog, Gradients, ParamCoord,
    TrainConfig, TrainOutcome,
};
