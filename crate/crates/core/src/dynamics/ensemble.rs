//! Probabilistic ensemble: each member maps a normalised `(state, action)`
//! to a diagonal Gaussian over the next state. The mean head predicts the
//! state delta; the log-variance head is soft-clamped before exponentiation.

use serde::{Deserialize, Serialize};

use super::{Normalizer, Transition};
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::math::{DiagonalGaussian, RngStream};
use crate::nn::{FeedforwardNet, Gradients};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub ensemble_size: usize,
    pub hidden: Vec<usize>,
    pub logvar_min: f64,
    pub logvar_max: f64,
    /// Start every output layer at zero (mean = input state, unit variance).
    pub zero_init_output: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 4,
            hidden: vec![64, 64],
            logvar_min: -10.0,
            logvar_max: 4.0,
            zero_init_output: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::InvalidConfig("model.ensemble_size must be >= 1".into()));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::InvalidConfig("model.hidden widths must be >= 1".into()));
        }
        if !(self.logvar_max - self.logvar_min > 2.0) {
            return Err(Error::InvalidConfig(
                "model.logvar_max must exceed model.logvar_min by more than 2".into(),
            ));
        }
        Ok(())
    }
}

/// Differentiable clamp into `(lo, hi)`: identity on `[lo + 1, hi - 1]`,
/// exponential approach to the bounds outside. Returns value and slope.
pub fn soft_clamp(x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let upper_knee = hi - 1.0;
    let lower_knee = lo + 1.0;
    if x > upper_knee {
        let e = (upper_knee - x).exp();
        (hi - e, e)
    } else if x < lower_knee {
        let e = (x - lower_knee).exp();
        (lo + e, e)
    } else {
        (x, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticNet {
    pub net: FeedforwardNet,
    pub state_dim: usize,
    pub action_dim: usize,
    pub logvar_min: f64,
    pub logvar_max: f64,
}

impl ProbabilisticNet {
    pub fn new(cfg: &ModelConfig, state_dim: usize, action_dim: usize, rng: &mut RngStream) -> Self {
        let mut widths = vec![state_dim + action_dim];
        widths.extend(&cfg.hidden);
        widths.push(2 * state_dim);
        Self {
            net: FeedforwardNet::new(&widths, rng, cfg.zero_init_output),
            state_dim,
            action_dim,
            logvar_min: cfg.logvar_min,
            logvar_max: cfg.logvar_max,
        }
    }

    /// Mean and log-variance for an already-normalised input.
    fn heads(&self, state: &[f64], raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.state_dim;
        let mean = state.iter().zip(&raw[..d]).map(|(s, delta)| s + delta).collect();
        let logvar = raw[d..]
            .iter()
            .map(|&r| soft_clamp(r, self.logvar_min, self.logvar_max).0)
            .collect();
        (mean, logvar)
    }

    pub fn predict(&self, normalizer: &Normalizer, state: &[f64], action: &[f64]) -> Result<DiagonalGaussian> {
        let raw = self.net.forward(&normalizer.apply(state, action));
        let (mean, logvar) = self.heads(state, &raw);
        ensure_finite("predicted mean", &mean)?;
        ensure_finite("predicted log-variance", &logvar)?;
        DiagonalGaussian::new(mean, logvar.into_iter().map(f64::exp).collect())
    }
}

/// Negative log-likelihood of a batch (sum over samples, constants dropped):
/// `Σ_n (μ − s')ᵀ Σ⁻¹ (μ − s') + ln det Σ`, with its exact parameter gradient.
pub fn nll_loss(member: &ProbabilisticNet, normalizer: &Normalizer, batch: &[&Transition]) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(&member.net);
    let mut loss = 0.0;
    let d = member.state_dim;
    let mut grad_out = vec![0.0; 2 * d];
    for t in batch {
        let input = normalizer.apply(&t.state, &t.action);
        let cache = member.net.forward_cached(&input);
        let raw = cache.output();
        for i in 0..d {
            let (logvar, slope) = soft_clamp(raw[d + i], member.logvar_min, member.logvar_max);
            let inv_var = (-logvar).exp();
            let residual = t.state[i] + raw[i] - t.next_state[i];
            let quad = residual * residual * inv_var;
            loss += quad + logvar;
            grad_out[i] = 2.0 * residual * inv_var;
            grad_out[d + i] = (1.0 - quad) * slope;
        }
        member.net.backward(&cache, &grad_out, &mut grads);
    }
    (loss, grads)
}

/// Loss only, without the backward pass.
pub(crate) fn nll_value(member: &ProbabilisticNet, t: &Transition, input: &[f64]) -> f64 {
    let raw = member.net.forward(input);
    let d = member.state_dim;
    (0..d)
        .map(|i| {
            let logvar = soft_clamp(raw[d + i], member.logvar_min, member.logvar_max).0;
            let residual = t.state[i] + raw[i] - t.next_state[i];
            residual * residual * (-logvar).exp() + logvar
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub config: ModelConfig,
    pub state_dim: usize,
    pub action_dim: usize,
    pub members: Vec<ProbabilisticNet>,
    pub normalizer: Normalizer,
}

impl EnsembleModel {
    /// Member `i` is initialised from `rng.child(i)`.
    pub fn new(config: &ModelConfig, state_dim: usize, action_dim: usize, rng: &RngStream) -> Result<Self> {
        config.validate()?;
        let members = (0..config.ensemble_size)
            .map(|i| ProbabilisticNet::new(config, state_dim, action_dim, &mut rng.child(i as u64)))
            .collect();
        Ok(Self {
            config: config.clone(),
            state_dim,
            action_dim,
            members,
            normalizer: Normalizer::identity(state_dim + action_dim),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn predict(&self, member: usize, state: &[f64], action: &[f64]) -> Result<DiagonalGaussian> {
        if member >= self.members.len() {
            return Err(Error::InvalidConfig(format!(
                "member index {member} out of range for ensemble of {}",
                self.members.len()
            )));
        }
        ensure_dim("predict state", self.state_dim, state.len())?;
        ensure_dim("predict action", self.action_dim, action.len())?;
        ensure_finite("predict input", state)?;
        ensure_finite("predict input", action)?;
        self.members[member].predict(&self.normalizer, state, action)
    }

    pub fn nll_loss(&self, member: usize, batch: &[&Transition]) -> (f64, Gradients) {
        nll_loss(&self.members[member], &self.normalizer, batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_clamp_is_identity_inside_and_bounded_outside() {
        for x in [-8.5, -3.0, 0.0, 2.9] {
            assert_eq!(soft_clamp(x, -10.0, 4.0), (x, 1.0));
        }
        for x in [-1e3, -50.0, -9.5, 3.5, 10.0, 1e3] {
            let (y, s) = soft_clamp(x, -10.0, 4.0);
            assert!((-10.0..=4.0).contains(&y), "{x} -> {y}");
            assert!(s >= 0.0 && s <= 1.0);
        }
        // C1 at the knees.
        let eps = 1e-9;
        let (a, _) = soft_clamp(3.0 - eps, -10.0, 4.0);
        let (b, _) = soft_clamp(3.0 + eps, -10.0, 4.0);
        assert!((b - a - 2.0 * eps).abs() < 1e-12);
    }

    #[test]
    fn zero_initialised_member_predicts_identity_with_unit_variance() {
        let cfg = ModelConfig {
            zero_init_output: true,
            hidden: vec![8, 8],
            ..ModelConfig::default()
        };
        let m = EnsembleModel::new(&cfg, 3, 2, &RngStream::new(0, 0)).unwrap();
        let s = [0.5, -1.0, 2.0];
        let g = m.predict(0, &s, &[0.1, 0.2]).unwrap();
        assert_eq!(g.mean(), &s);
        assert_eq!(g.variance(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn members_disagree_at_initialisation() {
        let cfg = ModelConfig {
            hidden: vec![16, 16],
            ..ModelConfig::default()
        };
        let m = EnsembleModel::new(&cfg, 2, 1, &RngStream::new(3, 0)).unwrap();
        let a = m.predict(0, &[0.3, 0.4], &[0.5]).unwrap();
        let b = m.predict(1, &[0.3, 0.4], &[0.5]).unwrap();
        assert_ne!(a.mean(), b.mean());
    }

    #[test]
    fn predict_rejects_bad_input() {
        let m = EnsembleModel::new(&ModelConfig::default(), 2, 1, &RngStream::new(0, 0)).unwrap();
        assert!(matches!(
            m.predict(0, &[f64::NAN, 0.0], &[0.0]),
            Err(Error::NonFinite(_))
        ));
        assert!(m.predict(7, &[0.0, 0.0], &[0.0]).is_err());
        assert!(m.predict(0, &[0.0], &[0.0]).is_err());
    }

    fn single(state: f64, next: f64) -> Transition {
        Transition {
            state: vec![state],
            action: vec![0.0],
            next_state: vec![next],
            reward: 0.0,
        }
    }

    #[test]
    fn nll_perfect_prediction_unit_variance_is_zero() {
        let cfg = ModelConfig {
            zero_init_output: true,
            hidden: vec![4],
            ..ModelConfig::default()
        };
        let m = EnsembleModel::new(&cfg, 1, 1, &RngStream::new(0, 0)).unwrap();
        let t = single(0.7, 0.7);
        assert_eq!(m.nll_loss(0, &[&t]).0, 0.0);
        let t = single(0.0, -1.0);
        assert_eq!(m.nll_loss(0, &[&t]).0, 1.0);
    }

    #[test]
    fn nll_value_agrees_with_nll_loss() {
        let m = EnsembleModel::new(
            &ModelConfig {
                hidden: vec![6],
                ..ModelConfig::default()
            },
            1,
            1,
            &RngStream::new(2, 0),
        )
        .unwrap();
        let t = single(0.2, 0.9);
        let input = m.normalizer.apply(&t.state, &t.action);
        let v = nll_value(&m.members[0], &t, &input);
        assert!((v - m.nll_loss(0, &[&t]).0).abs() < 1e-12);
    }
}
