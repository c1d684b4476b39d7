//! Analytic, noise-free continuous-control environments.
//!
//! Each environment is a [`Dynamics`] implementation (closed-form transition
//! and reward) wrapped in an [`Environment`] that tracks the current state,
//! step counter and episode horizon. All integrate with semi-implicit Euler
//! at a fixed step.

mod cartpole;
mod params;
mod pendulum;
mod point_mass;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use cartpole::CartPole;
pub use params::ParamSet;
pub use pendulum::Pendulum;
pub use point_mass::DeceptivePointMass;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::{DiagonalGaussian, RngStream};
use crate::planner::{DynamicsModel, RewardModel};

/// Per-dimension closed action interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl ActionBounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Self {
        assert_eq!(low.len(), high.len());
        assert!(low.iter().zip(&high).all(|(l, h)| l <= h));
        Self { low, high }
    }

    pub fn symmetric(dim: usize, limit: f64) -> Self {
        Self::new(vec![-limit; dim], vec![limit; dim])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    /// Clipped action and whether any component was out of bounds.
    pub fn clip(&self, action: &[f64]) -> (Vec<f64>, bool) {
        let mut clipped = false;
        let out = action
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(&a, (&lo, &hi))| {
                let c = a.clamp(lo, hi);
                clipped |= c != a;
                c
            })
            .collect();
        (out, clipped)
    }

    pub fn sample_uniform(&self, rng: &mut RngStream) -> Vec<f64> {
        self.low
            .iter()
            .zip(&self.high)
            .map(|(&lo, &hi)| rng.uniform(lo, hi))
            .collect()
    }
}

/// Closed-form physics and reward of one environment.
pub trait Dynamics: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    fn action_bounds(&self) -> ActionBounds;
    fn initial_state(&self, rng: &mut RngStream) -> Vec<f64>;
    /// Next state and reward `r(state, action)` for an in-bounds action.
    fn transition(&self, state: &[f64], action: &[f64]) -> (Vec<f64>, f64);
    /// Exact bound on `|reward|` over states and in-bounds actions.
    fn r_max(&self) -> f64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    pub horizon: usize,
    /// Standard deviation of optional additive Gaussian state noise.
    pub process_noise_std: f64,
    /// Physical-parameter overrides; see each environment for the keys.
    pub params: BTreeMap<String, f64>,
}

impl EnvConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            horizon: 200,
            process_noise_std: 0.0,
            params: BTreeMap::new(),
        }
    }
}

pub const ENV_NAMES: [&str; 3] = [Pendulum::NAME, DeceptivePointMass::NAME, CartPole::NAME];

pub fn make_dynamics(name: &str, params: &BTreeMap<String, f64>) -> Result<Box<dyn Dynamics>> {
    Ok(match name {
        Pendulum::NAME => Box::new(Pendulum::from_params(params)?),
        DeceptivePointMass::NAME => Box::new(DeceptivePointMass::from_params(params)?),
        CartPole::NAME => Box::new(CartPole::from_params(params)?),
        other => return Err(Error::UnknownEnvironment(other.to_string())),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// The supplied action was outside the bounds and has been clipped.
    pub clipped: bool,
}

pub struct Environment {
    dynamics: Box<dyn Dynamics>,
    bounds: ActionBounds,
    horizon: usize,
    process_noise_std: f64,
    state: Vec<f64>,
    steps: usize,
    noise: RngStream,
}

impl Environment {
    pub fn new(dynamics: Box<dyn Dynamics>, horizon: usize, process_noise_std: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("env.horizon must be >= 1".into()));
        }
        if !(process_noise_std >= 0.0) {
            return Err(Error::InvalidConfig("env.process_noise_std must be >= 0".into()));
        }
        let bounds = dynamics.action_bounds();
        let state = vec![0.0; dynamics.state_dim()];
        Ok(Self {
            dynamics,
            bounds,
            horizon,
            process_noise_std,
            state,
            steps: 0,
            noise: RngStream::new(0, 0),
        })
    }

    pub fn from_config(cfg: &EnvConfig) -> Result<Self> {
        Self::new(
            make_dynamics(&cfg.name, &cfg.params)?,
            cfg.horizon,
            cfg.process_noise_std,
        )
    }

    pub fn name(&self) -> &'static str {
        self.dynamics.name()
    }

    pub fn dynamics(&self) -> &dyn Dynamics {
        self.dynamics.as_ref()
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn action_bounds(&self) -> &ActionBounds {
        &self.bounds
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn r_max(&self) -> f64 {
        self.dynamics.r_max()
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self, rng: &mut RngStream) -> Vec<f64> {
        self.noise = rng.child(u64::MAX);
        self.state = self.dynamics.initial_state(rng);
        self.steps = 0;
        self.state.clone()
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        ensure_dim("env action", self.action_dim(), action.len())?;
        ensure_finite("env action", action)?;
        let (action, clipped) = self.bounds.clip(action);
        let (mut next, reward) = self.dynamics.transition(&self.state, &action);
        if self.process_noise_std > 0.0 {
            for x in &mut next {
                *x += self.process_noise_std * self.noise.standard_normal();
            }
        }
        self.state = next.clone();
        self.steps += 1;
        Ok(StepOutcome {
            next_state: next,
            reward,
            done: self.steps >= self.horizon,
            clipped,
        })
    }
}

/// Wraps the true noise-free dynamics as a one-member "learned" model with
/// a tiny constant variance.
pub struct OracleModel<'a> {
    pub dynamics: &'a dyn Dynamics,
    pub variance: f64,
}

impl<'a> OracleModel<'a> {
    pub fn new(dynamics: &'a dyn Dynamics) -> Self {
        Self {
            dynamics,
            variance: 1e-12,
        }
    }
}

impl DynamicsModel for OracleModel<'_> {
    fn num_members(&self) -> usize {
        1
    }

    fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.dynamics.action_bounds().dim()
    }

    fn predict(&self, _member: usize, state: &[f64], action: &[f64]) -> Result<DiagonalGaussian> {
        let (next, _) = self.dynamics.transition(state, action);
        let d = next.len();
        DiagonalGaussian::new(next, vec![self.variance; d])
    }
}

impl RewardModel for OracleModel<'_> {
    fn predict_reward(&self, state: &[f64], action: &[f64]) -> f64 {
        self.dynamics.transition(state, action).1
    }
}

/// Wraps an angle to `(-π, π]`.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    theta.sin().atan2(theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_rejected() {
        assert!(matches!(
            Environment::from_config(&EnvConfig::named("mujoco-ant")),
            Err(Error::UnknownEnvironment(_))
        ));
    }

    #[test]
    fn step_counts_and_terminates() {
        let mut cfg = EnvConfig::named(Pendulum::NAME);
        cfg.horizon = 3;
        let mut env = Environment::from_config(&cfg).unwrap();
        env.reset(&mut RngStream::new(0, 0));
        let a = [0.0];
        assert!(!env.step(&a).unwrap().done);
        assert!(!env.step(&a).unwrap().done);
        assert!(env.step(&a).unwrap().done);
        assert_eq!(env.steps(), 3);
        env.reset(&mut RngStream::new(0, 0));
        assert_eq!(env.steps(), 0);
    }

    #[test]
    fn out_of_bounds_actions_are_clipped_and_flagged() {
        let mut env = Environment::from_config(&EnvConfig::named(Pendulum::NAME)).unwrap();
        env.reset(&mut RngStream::new(0, 0));
        assert!(env.step(&[100.0]).unwrap().clipped);
        assert!(!env.step(&[0.5]).unwrap().clipped);
        assert!(matches!(env.step(&[f64::NAN]), Err(Error::NonFinite(_))));
        assert!(env.step(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn noise_free_steps_are_deterministic() {
        for name in ENV_NAMES {
            let dynamics = make_dynamics(name, &BTreeMap::new()).unwrap();
            let mut rng = RngStream::new(4, 4);
            let s = dynamics.initial_state(&mut rng);
            let a = dynamics.action_bounds().sample_uniform(&mut rng);
            assert_eq!(dynamics.transition(&s, &a), dynamics.transition(&s, &a));
        }
    }

    #[test]
    fn process_noise_perturbs_state() {
        let mut cfg = EnvConfig::named(DeceptivePointMass::NAME);
        cfg.process_noise_std = 0.1;
        let mut env = Environment::from_config(&cfg).unwrap();
        env.reset(&mut RngStream::new(0, 0));
        let out = env.step(&[0.0, 0.0]).unwrap();
        assert!(out.next_state.iter().any(|x| *x != 0.0));
    }

    #[test]
    fn wrap_angle_range() {
        for k in -20..20 {
            let w = wrap_angle(0.3 * k as f64);
            assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
        }
    }
}
