//! Classification heads, losses, adaptive task weighting and training.

mod checkpoint;
pub mod config;
pub mod loss;
mod model;
pub mod optim;
mod pipeline;
mod trainer;

pub use checkpoint::{parse_prediction_line, prediction_to_line, Checkpoint, Prediction};
pub use config::{CrossAttentionMode, FusionMode, TrainConfig};
pub use loss::{interaction_loss, multitask_loss, trajectory_loss, MultitaskLoss, Objective};
pub use model::{
    prepare_candidate, prepare_example, BatchLoss, FalconModel, Forward, PreparedCandidate, TrainingExample,
};
pub use optim::AdamW;
pub use pipeline::{prepare_examples, pretrain_from_triples, train_labeled};
pub use trainer::{evaluate, scores, EpochLog, TrainOutcome, Trainer};
