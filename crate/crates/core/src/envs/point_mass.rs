use std::collections::BTreeMap;

use super::{ActionBounds, Dynamics, ParamSet};
use crate::error::{Error, Result};
use crate::math::RngStream;

/// Damped 2D point mass with a deceptive reward layout.
///
/// State `(x, y, vx, vy)`, action `(ax, ay) ∈ [−1, 1]²`. Per step:
/// `v ← clamp(v + dt (accel·a − damping·v), ±max_speed)`, `p ← p + dt v`,
/// positions stopped at `±arena` (the blocked velocity component is zeroed).
///
/// Reward `bump_d(p) + bump_g(p) − action_cost·‖a‖²` with compact bumps
/// `h·max(0, 1 − ‖p − c‖²/r²)²`: a small distractor next to the start and
/// a large goal further away. Episodes start at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct DeceptivePointMass {
    pub dt: f64,
    pub accel: f64,
    pub damping: f64,
    pub max_speed: f64,
    pub arena: f64,
    pub distractor: Bump,
    pub goal: Bump,
    pub action_cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

impl Bump {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let u = 1.0 - (dx * dx + dy * dy) / (self.radius * self.radius);
        if u > 0.0 {
            self.height * u * u
        } else {
            0.0
        }
    }

    fn overlaps(&self, other: &Bump) -> bool {
        let d = ((self.center[0] - other.center[0]).powi(2) + (self.center[1] - other.center[1]).powi(2)).sqrt();
        d < self.radius + other.radius
    }
}

impl Default for DeceptivePointMass {
    fn default() -> Self {
        Self::from_params(&BTreeMap::new()).expect("defaults are valid")
    }
}

impl DeceptivePointMass {
    pub const NAME: &'static str = "deceptive-point-mass";

    pub fn from_params(params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = ParamSet::new(Self::NAME, params);
        let env = Self {
            dt: p.positive("dt", 0.1)?,
            accel: p.positive("accel", 2.0)?,
            damping: p.non_negative("damping", 0.5)?,
            max_speed: p.positive("max_speed", 3.0)?,
            arena: p.positive("arena", 4.0)?,
            distractor: Bump {
                center: [p.get("distractor_x", 0.6)?, p.get("distractor_y", 0.0)?],
                radius: p.positive("distractor_radius", 0.5)?,
                height: p.non_negative("distractor_height", 0.5)?,
            },
            goal: Bump {
                center: [p.get("goal_x", -2.0)?, p.get("goal_y", 1.2)?],
                radius: p.positive("goal_radius", 1.0)?,
                height: p.non_negative("goal_height", 10.0)?,
            },
            action_cost: p.non_negative("action_cost", 0.01)?,
        };
        p.finish()?;
        if env.distractor.overlaps(&env.goal) {
            return Err(Error::InvalidConfig(
                "deceptive-point-mass: distractor and goal regions must not overlap".into(),
            ));
        }
        Ok(env)
    }

    pub fn bump_reward(&self, x: f64, y: f64) -> f64 {
        self.distractor.value(x, y) + self.goal.value(x, y)
    }
}

impl Dynamics for DeceptivePointMass {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn action_bounds(&self) -> ActionBounds {
        ActionBounds::symmetric(2, 1.0)
    }

    fn initial_state(&self, _rng: &mut RngStream) -> Vec<f64> {
        vec![0.0; 4]
    }

    fn transition(&self, state: &[f64], action: &[f64]) -> (Vec<f64>, f64) {
        let (x, y) = (state[0], state[1]);
        let cost = self.action_cost * (action[0] * action[0] + action[1] * action[1]);
        let reward = self.bump_reward(x, y) - cost;

        let mut next = state.to_vec();
        for k in 0..2 {
            let v = state[2 + k] + self.dt * (self.accel * action[k] - self.damping * state[2 + k]);
            let mut v = v.clamp(-self.max_speed, self.max_speed);
            let mut p = state[k] + self.dt * v;
            if p.abs() > self.arena {
                p = p.clamp(-self.arena, self.arena);
                v = 0.0;
            }
            next[k] = p;
            next[2 + k] = v;
        }
        (next, reward)
    }

    fn r_max(&self) -> f64 {
        // Supports are disjoint, so the positive peak is one bump height;
        // the most negative reward is full actuation outside both bumps.
        self.distractor.height.max(self.goal.height).max(2.0 * self.action_cost)
    }
}
