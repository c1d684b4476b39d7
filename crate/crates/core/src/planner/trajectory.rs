use serde::{Deserialize, Serialize};

use super::{DynamicsModel, RewardModel};
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::RngStream;

/// One imagined rollout of an action sequence through a single member.
///
/// `states[0]` is the start state; `states[t]` for `t ≥ 1` are sampled from
/// the member's prediction at `(states[t-1], actions[t-1])`. `entropies[t]`
/// is the entropy of the prediction made at `(states[t], actions[t])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImaginedTrajectory {
    pub actions: Vec<Vec<f64>>,
    pub states: Vec<Vec<f64>>,
    pub extrinsic_rewards: Vec<f64>,
    pub entropies: Vec<f64>,
    pub member: usize,
    /// False if the rollout produced a non-finite state, reward or entropy.
    pub valid: bool,
    pub total_return: Option<f64>,
}

impl ImaginedTrajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Scores the trajectory and stores the result.
    pub fn assign_return(&mut self, beta: f64, gamma: f64) -> f64 {
        let j = score(self, beta, gamma);
        self.total_return = Some(j);
        j
    }

    /// Whether the stored return equals a fresh recomputation.
    pub fn is_consistent(&self, beta: f64, gamma: f64) -> bool {
        self.total_return
            .is_some_and(|j| j.to_bits() == score(self, beta, gamma).to_bits())
    }
}

pub fn rollout<M, R>(
    model: &M,
    reward: &R,
    s0: &[f64],
    actions: &[Vec<f64>],
    member: usize,
    rng: &mut RngStream,
) -> Result<ImaginedTrajectory>
where
    M: DynamicsModel + ?Sized,
    R: RewardModel + ?Sized,
{
    ensure_dim("rollout start state", model.state_dim(), s0.len())?;
    ensure_finite("rollout start state", s0)?;
    if member >= model.num_members() {
        return Err(Error::InvalidConfig(format!(
            "member index {member} out of range for {} members",
            model.num_members()
        )));
    }
    for a in actions {
        ensure_dim("rollout action", model.action_dim(), a.len())?;
    }

    let h = actions.len();
    let mut traj = ImaginedTrajectory {
        actions: actions.to_vec(),
        states: Vec::with_capacity(h),
        extrinsic_rewards: Vec::with_capacity(h),
        entropies: Vec::with_capacity(h),
        member,
        valid: true,
        total_return: None,
    };
    let mut state = s0.to_vec();
    for (t, action) in actions.iter().enumerate() {
        let r = reward.predict_reward(&state, action);
        let dist = match model.predict(member, &state, action) {
            Ok(d) => d,
            Err(_) => {
                traj.valid = false;
                break;
            }
        };
        let h_t = dist.entropy();
        if !r.is_finite() || !h_t.is_finite() {
            traj.valid = false;
            break;
        }
        traj.extrinsic_rewards.push(r);
        traj.entropies.push(h_t);
        let next = if t + 1 < h { Some(dist.sample(rng)) } else { None };
        traj.states.push(std::mem::take(&mut state));
        match next {
            Some(s) if s.iter().all(|x| x.is_finite()) => state = s,
            Some(_) => {
                traj.valid = false;
                break;
            }
            None => {}
        }
    }
    Ok(traj)
}

/// `Σ_t γ^t (r_t + β·H_t)`; `-∞` for invalid trajectories.
pub fn score(traj: &ImaginedTrajectory, beta: f64, gamma: f64) -> f64 {
    if !traj.valid {
        return f64::NEG_INFINITY;
    }
    let mut discount = 1.0;
    let mut total = 0.0;
    for (r, h) in traj.extrinsic_rewards.iter().zip(&traj.entropies) {
        total += discount * (r + beta * h);
        discount *= gamma;
    }
    total
}
