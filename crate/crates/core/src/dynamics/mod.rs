//! Learned dynamics and reward models.

mod buffer;
mod checkpoint;
mod ensemble;
mod normalizer;
mod reward;
mod train;

pub use buffer::{ReplayBuffer, Transition};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use ensemble::{nll_loss, soft_clamp, EnsembleModel, ModelConfig, ProbabilisticNet};
pub use normalizer::Normalizer;
pub use reward::RewardNet;
pub use train::{bootstrap_indices, train_models, variance_prior_loss, TrainConfig, TrainingReport};
