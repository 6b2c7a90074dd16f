//! The constant-attention one-layer ReLU transformer: config, data, weights,
//! exact forward/backward and training.

pub mod config;
pub mod dataset;
pub mod forward;
pub mod train;
pub mod weights;

pub use config::ModelConfig;
pub use dataset::{generate_dataset, Dataset, Pair};
pub use forward::{accuracy, forward, forward_batch, loss_and_grad, Activations};
pub use train::{evaluate, train, train_with_observer, EpochStats, TrainHistory};
pub use weights::ModelWeights;
