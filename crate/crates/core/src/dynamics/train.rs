//! Fitting the dynamics ensemble (Gaussian NLL on bootstrap resamples) and
//! the reward net (MSE) from the replay buffer.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::nll_value;
use super::{nll_loss, soft_clamp, EnsembleModel, Normalizer, ProbabilisticNet, ReplayBuffer, RewardNet, Transition};
use crate::error::{Error, Result};
use crate::math::RngStream;
use crate::nn::{Adam, Gradients};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Passes over the (resampled) buffer per call.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub reward_learning_rate: f64,
    /// Train each member on its own bootstrap resample of the buffer.
    pub bootstrap: bool,
    /// Weight of the variance prior (0 disables it). See
    /// [`variance_prior_loss`].
    pub variance_prior: f64,
    /// Half-width of the box, in normalised input units, that pseudo-inputs
    /// for the prior are drawn from uniformly.
    pub prior_spread: f64,
    /// Log-variance the prior pulls towards away from the data.
    pub prior_logvar: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 32,
            learning_rate: 1e-3,
            reward_learning_rate: 1e-3,
            bootstrap: true,
            variance_prior: 0.0,
            prior_spread: 1.0,
            prior_logvar: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("train.batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.reward_learning_rate > 0.0) {
            return Err(Error::InvalidConfig("train learning rates must be > 0".into()));
        }
        if !(self.variance_prior >= 0.0) || !(self.prior_spread > 0.0) || !self.prior_logvar.is_finite() {
            return Err(Error::InvalidConfig(
                "train.variance_prior must be >= 0, train.prior_spread > 0 and train.prior_logvar finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Buffer size at training time.
    pub samples: usize,
    /// `member_losses[m][e]`: mean per-sample NLL of member `m` on its
    /// training view after epoch `e`.
    pub member_losses: Vec<Vec<f64>>,
    /// Mean squared reward error on the full buffer after each epoch.
    pub reward_mse: Vec<f64>,
    pub gradient_steps: usize,
}

impl TrainingReport {
    /// Mean over members of the final-epoch NLL.
    pub fn final_loss_mean(&self) -> Option<f64> {
        let finals: Vec<f64> = self.member_losses.iter().filter_map(|l| l.last().copied()).collect();
        if finals.is_empty() {
            None
        } else {
            Some(finals.iter().sum::<f64>() / finals.len() as f64)
        }
    }

    pub fn final_reward_mse(&self) -> Option<f64> {
        self.reward_mse.last().copied()
    }
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, rng: &mut RngStream) -> Vec<usize> {
    (0..n).map(|_| rng.index(n)).collect()
}

/// Stream layout: member `m` uses `rng.child(m)`; the reward net uses
/// `rng.child(ensemble_size)`. Members train in parallel.
pub fn train_models(
    model: &mut EnsembleModel,
    reward: &mut RewardNet,
    buffer: &ReplayBuffer,
    cfg: &TrainConfig,
    rng: &RngStream,
) -> Result<TrainingReport> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    cfg.validate()?;

    let normalizer = Normalizer::from_buffer(buffer);
    model.normalizer = normalizer.clone();
    reward.normalizer = normalizer.clone();

    let data: Vec<&Transition> = buffer.iter().collect();
    let inputs: Vec<Vec<f64>> = data.iter().map(|t| normalizer.apply(&t.state, &t.action)).collect();
    let n = data.len();
    let ensemble_size = model.members.len();

    let reward_rng = rng.child(ensemble_size as u64);
    let (member_results, reward_mse) = rayon::join(
        || {
            model
                .members
                .par_iter_mut()
                .enumerate()
                .map(|(m, member)| {
                    let mut stream = rng.child(m as u64);
                    let view = if cfg.bootstrap {
                        bootstrap_indices(n, &mut stream)
                    } else {
                        (0..n).collect()
                    };
                    train_member(member, &normalizer, &data, &inputs, view, cfg, &mut stream)
                })
                .collect::<Vec<_>>()
        },
        || train_reward(reward, &data, &inputs, cfg, &mut reward_rng.clone()),
    );

    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    Ok(TrainingReport {
        samples: n,
        member_losses: member_results,
        reward_mse,
        gradient_steps: (ensemble_size + 1) * steps_per_epoch * cfg.epochs,
    })
}

fn train_member(
    member: &mut ProbabilisticNet,
    normalizer: &Normalizer,
    data: &[&Transition],
    inputs: &[Vec<f64>],
    mut view: Vec<usize>,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Vec<f64> {
    let mut opt = Adam::new(&member.net, cfg.learning_rate);
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut batch: Vec<&Transition> = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        view.shuffle(rng);
        for chunk in view.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let (_, mut grads) = nll_loss(member, normalizer, &batch);
            if cfg.variance_prior > 0.0 {
                let dim = inputs[0].len();
                let pseudo: Vec<Vec<f64>> = (0..chunk.len())
                    .map(|_| {
                        (0..dim)
                            .map(|_| rng.uniform(-cfg.prior_spread, cfg.prior_spread))
                            .collect()
                    })
                    .collect();
                let (_, prior) = variance_prior_loss(member, &pseudo, cfg.variance_prior, cfg.prior_logvar);
                grads.add(&prior);
            }
            grads.scale(1.0 / chunk.len() as f64);
            opt.step(&mut member.net, &grads);
        }
        let total: f64 = view.iter().map(|&i| nll_value(member, data[i], &inputs[i])).sum();
        losses.push(total / view.len() as f64);
    }
    losses
}

/// `w Σ_n Σ_i ½(e^{ℓ−ℓ₀} − 1 − (ℓ − ℓ₀))` over normalised inputs, with
/// `ℓ` the clamped log-variance and `ℓ₀ = prior_logvar`: the variance part
/// of `KL(N(μ, e^ℓ) ‖ N(μ, e^{ℓ₀}))`. Evaluated at pseudo-inputs spread
/// over a box around the data it keeps the predicted variance near `e^{ℓ₀}`
/// wherever data is sparse, so the entropy of a single member tracks
/// novelty even on noise-free dynamics. Gradients reach only the output
/// layer.
pub fn variance_prior_loss(
    member: &ProbabilisticNet,
    inputs: &[Vec<f64>],
    weight: f64,
    prior_logvar: f64,
) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(&member.net);
    let d = member.state_dim;
    let mut grad_out = vec![0.0; 2 * d];
    let mut loss = 0.0;
    for x in inputs {
        let cache = member.net.forward_cached(x);
        let raw = cache.output();
        for i in 0..d {
            let (logvar, slope) = soft_clamp(raw[d + i], member.logvar_min, member.logvar_max);
            let gap = logvar - prior_logvar;
            let ratio = gap.exp();
            loss += weight * 0.5 * (ratio - 1.0 - gap);
            grad_out[d + i] = weight * 0.5 * (ratio - 1.0) * slope;
        }
        member.net.backward(&cache, &grad_out, &mut grads);
    }
    // Only the variance readout learns from the prior; the hidden features
    // the mean head relies on are shaped by the data alone.
    let last = grads.layers.len() - 1;
    for (w, b) in &mut grads.layers[..last] {
        w.iter_mut().chain(b.iter_mut()).for_each(|g| *g = 0.0);
    }
    (loss, grads)
}

fn train_reward(
    reward: &mut RewardNet,
    data: &[&Transition],
    inputs: &[Vec<f64>],
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Vec<f64> {
    let mut opt = Adam::new(&reward.net, cfg.reward_learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut mse = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grads = Gradients::zeros_like(&reward.net);
            for &i in chunk {
                let cache = reward.net.forward_cached(&inputs[i]);
                let err = cache.output()[0] - data[i].reward;
                reward.net.backward(&cache, &[2.0 * err], &mut grads);
            }
            grads.scale(1.0 / chunk.len() as f64);
            opt.step(&mut reward.net, &grads);
        }
        let total: f64 = inputs
            .iter()
            .zip(data)
            .map(|(x, t)| {
                let e = reward.net.forward(x)[0] - t.reward;
                e * e
            })
            .sum();
        mse.push(total / data.len() as f64);
    }
    mse
}
