use serde::{Deserialize, Serialize};

use super::{ModelConfig, Normalizer};
use crate::math::RngStream;
use crate::nn::FeedforwardNet;

/// Learned reward `r_m(s, a)`: a feedforward net with a scalar head,
/// fitted by mean-squared error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardNet {
    pub net: FeedforwardNet,
    pub normalizer: Normalizer,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl RewardNet {
    pub fn new(cfg: &ModelConfig, state_dim: usize, action_dim: usize, rng: &mut RngStream) -> Self {
        let mut widths = vec![state_dim + action_dim];
        widths.extend(&cfg.hidden);
        widths.push(1);
        Self {
            net: FeedforwardNet::new(&widths, rng, cfg.zero_init_output),
            normalizer: Normalizer::identity(state_dim + action_dim),
            state_dim,
            action_dim,
        }
    }

    pub fn predict_reward(&self, state: &[f64], action: &[f64]) -> f64 {
        self.net.forward(&self.normalizer.apply(state, action))[0]
    }
}
