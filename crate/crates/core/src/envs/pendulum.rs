use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{wrap_angle, ActionBounds, Dynamics, ParamSet};
use crate::error::Result;
use crate::math::RngStream;

/// Torque-limited pendulum swing-up.
///
/// State `(θ, ω)` with `θ = 0` upright (θ is not wrapped). Dynamics
/// `θ̈ = (g/l) sin θ − b ω/(m l²) + u/(m l²)`, integrated with `substeps`
/// semi-implicit Euler steps per `dt`; ω is clamped to `±max_speed`.
/// Reward `−(wrap(θ)² + 0.1 ω² + 0.001 u²)`. Resets hang downward,
/// `θ ~ π + U(−init_spread, init_spread)`, `ω = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pendulum {
    pub dt: f64,
    pub gravity: f64,
    pub mass: f64,
    pub length: f64,
    pub damping: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub substeps: usize,
    pub init_spread: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::from_params(&BTreeMap::new()).expect("defaults are valid")
    }
}

impl Pendulum {
    pub const NAME: &'static str = "pendulum-swing-up";

    pub fn from_params(params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = ParamSet::new(Self::NAME, params);
        let env = Self {
            dt: p.positive("dt", 0.05)?,
            gravity: p.non_negative("gravity", 9.81)?,
            mass: p.positive("mass", 1.0)?,
            length: p.positive("length", 1.0)?,
            damping: p.non_negative("damping", 0.05)?,
            max_torque: p.positive("max_torque", 2.0)?,
            max_speed: p.positive("max_speed", 8.0)?,
            substeps: p.positive("substeps", 4.0)?.round().max(1.0) as usize,
            init_spread: p.non_negative("init_spread", 0.1)?,
        };
        p.finish()?;
        Ok(env)
    }

    /// Mechanical energy `½ m l² ω² + m g l cos θ`.
    pub fn energy(&self, state: &[f64]) -> f64 {
        let (theta, omega) = (state[0], state[1]);
        0.5 * self.mass * self.length * self.length * omega * omega
            + self.mass * self.gravity * self.length * theta.cos()
    }
}

impl Dynamics for Pendulum {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn action_bounds(&self) -> ActionBounds {
        ActionBounds::symmetric(1, self.max_torque)
    }

    fn initial_state(&self, rng: &mut RngStream) -> Vec<f64> {
        vec![PI + rng.uniform(-self.init_spread, self.init_spread), 0.0]
    }

    fn transition(&self, state: &[f64], action: &[f64]) -> (Vec<f64>, f64) {
        let (mut theta, mut omega) = (state[0], state[1]);
        let u = action[0];
        let angle_err = wrap_angle(theta);
        let reward = -(angle_err * angle_err + 0.1 * omega * omega + 0.001 * u * u);

        let inertia = self.mass * self.length * self.length;
        let h = self.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            let acc = self.gravity / self.length * theta.sin() - self.damping * omega / inertia + u / inertia;
            omega = (omega + h * acc).clamp(-self.max_speed, self.max_speed);
            theta += h * omega;
        }
        (vec![theta, omega], reward)
    }

    fn r_max(&self) -> f64 {
        PI * PI + 0.1 * self.max_speed * self.max_speed + 0.001 * self.max_torque * self.max_torque
    }
}
