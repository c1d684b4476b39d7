//! Entropy-regularised CEM model-predictive control.
//!
//! Candidate action sequences are rolled out through one ensemble member
//! each, scored by discounted model reward plus a temperature-weighted
//! predictive-entropy bonus, and the action-sequence distribution is refit
//! to the elites with exponential smoothing.

mod cem;
mod config;
mod trajectory;

pub use cem::{plan_action, ActionSequenceDistribution, IterationStats, PlanDiagnostics, PlanOutcome};
pub use config::{temperature, EliteFit, ExplorationSchedule, PlanConfig, ScheduleMode};
pub use trajectory::{rollout, score, ImaginedTrajectory};

use crate::dynamics::{EnsembleModel, RewardNet};
use crate::error::Result;
use crate::math::DiagonalGaussian;

/// Anything that can predict a next-state distribution per member.
pub trait DynamicsModel: Sync {
    fn num_members(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn predict(&self, member: usize, state: &[f64], action: &[f64]) -> Result<DiagonalGaussian>;
}

pub trait RewardModel: Sync {
    fn predict_reward(&self, state: &[f64], action: &[f64]) -> f64;
}

impl DynamicsModel for EnsembleModel {
    fn num_members(&self) -> usize {
        self.members.len()
    }

    fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn action_dim(&self) -> usize {
        self.action_dim
    }

    fn predict(&self, member: usize, state: &[f64], action: &[f64]) -> Result<DiagonalGaussian> {
        EnsembleModel::predict(self, member, state, action)
    }
}

impl RewardModel for RewardNet {
    fn predict_reward(&self, state: &[f64], action: &[f64]) -> f64 {
        RewardNet::predict_reward(self, state, action)
    }
}
