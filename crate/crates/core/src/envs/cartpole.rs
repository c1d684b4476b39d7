use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{wrap_angle, ActionBounds, Dynamics, ParamSet};
use crate::error::Result;
use crate::math::RngStream;

/// Cart-pole swing-up with horizontal force actuation.
///
/// State `(x, ẋ, θ, θ̇)`, `θ = 0` upright, `pole_length` is the half-length.
/// Classic cart-pole equations of motion integrated with `substeps`
/// semi-implicit Euler steps per `dt`. The cart is stopped at
/// `±track_limit`; speeds are clamped. Reward
/// `−(wrap(θ)² + 0.1 x² + 0.01 ẋ² + 0.01 θ̇² + 0.001 F²)`.
/// Resets near `x = 0`, hanging down.
#[derive(Clone, Debug, PartialEq)]
pub struct CartPole {
    pub dt: f64,
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub pole_length: f64,
    pub max_force: f64,
    pub track_limit: f64,
    pub max_cart_speed: f64,
    pub max_pole_speed: f64,
    pub substeps: usize,
    pub init_spread: f64,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::from_params(&BTreeMap::new()).expect("defaults are valid")
    }
}

impl CartPole {
    pub const NAME: &'static str = "cart-pole-swing-up";

    pub fn from_params(params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = ParamSet::new(Self::NAME, params);
        let env = Self {
            dt: p.positive("dt", 0.05)?,
            gravity: p.non_negative("gravity", 9.81)?,
            cart_mass: p.positive("cart_mass", 1.0)?,
            pole_mass: p.positive("pole_mass", 0.1)?,
            pole_length: p.positive("pole_length", 0.5)?,
            max_force: p.positive("max_force", 10.0)?,
            track_limit: p.positive("track_limit", 2.4)?,
            max_cart_speed: p.positive("max_cart_speed", 10.0)?,
            max_pole_speed: p.positive("max_pole_speed", 15.0)?,
            substeps: p.positive("substeps", 2.0)?.round().max(1.0) as usize,
            init_spread: p.non_negative("init_spread", 0.05)?,
        };
        p.finish()?;
        Ok(env)
    }
}

impl Dynamics for CartPole {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn action_bounds(&self) -> ActionBounds {
        ActionBounds::symmetric(1, self.max_force)
    }

    fn initial_state(&self, rng: &mut RngStream) -> Vec<f64> {
        let s = self.init_spread;
        vec![rng.uniform(-s, s), 0.0, PI + rng.uniform(-s, s), 0.0]
    }

    fn transition(&self, state: &[f64], action: &[f64]) -> (Vec<f64>, f64) {
        let (mut x, mut v, mut theta, mut omega) = (state[0], state[1], state[2], state[3]);
        let force = action[0];
        let err = wrap_angle(theta);
        let reward = -(err * err + 0.1 * x * x + 0.01 * v * v + 0.01 * omega * omega + 0.001 * force * force);

        let total = self.cart_mass + self.pole_mass;
        let ml = self.pole_mass * self.pole_length;
        let h = self.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            let (sin, cos) = theta.sin_cos();
            let temp = (force + ml * omega * omega * sin) / total;
            let theta_acc = (self.gravity * sin - cos * temp)
                / (self.pole_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total));
            let x_acc = temp - ml * theta_acc * cos / total;
            v = (v + h * x_acc).clamp(-self.max_cart_speed, self.max_cart_speed);
            x += h * v;
            if x.abs() > self.track_limit {
                x = x.clamp(-self.track_limit, self.track_limit);
                v = 0.0;
            }
            omega = (omega + h * theta_acc).clamp(-self.max_pole_speed, self.max_pole_speed);
            theta += h * omega;
        }
        (vec![x, v, theta, omega], reward)
    }

    fn r_max(&self) -> f64 {
        PI * PI
            + 0.1 * self.track_limit * self.track_limit
            + 0.01 * self.max_cart_speed * self.max_cart_speed
            + 0.01 * self.max_pole_speed * self.max_pole_speed
            + 0.001 * self.max_force * self.max_force
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_is_four_dimensional() {
        let c = CartPole::default();
        assert_eq!(c.state_dim(), 4);
        assert_eq!(c.initial_state(&mut RngStream::new(0, 0)).len(), 4);
    }

    #[test]
    fn upright_rest_is_fixed() {
        let c = CartPole::default();
        let (next, _) = c.transition(&[0.0, 0.0, 0.0, 0.0], &[0.0]);
        assert!(next.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn track_limit_holds_and_reward_is_bounded() {
        let c = CartPole::default();
        let mut s = c.initial_state(&mut RngStream::new(0, 0));
        for _ in 0..500 {
            let (next, r) = c.transition(&s, &[10.0]);
            assert!(r.is_finite() && r.abs() <= c.r_max());
            assert!(next[0].abs() <= c.track_limit);
            s = next;
        }
    }
}
