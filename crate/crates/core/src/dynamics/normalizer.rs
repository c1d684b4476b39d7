use serde::{Deserialize, Serialize};

use super::ReplayBuffer;

/// Per-feature standardisation of concatenated `(state, action)` inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const MIN_STD: f64 = 1e-8;

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Statistics over `(state, action)` of every buffered transition.
    /// Features with (near) zero spread keep unit scale.
    pub fn from_buffer(buffer: &ReplayBuffer) -> Self {
        let dim = buffer.state_dim() + buffer.action_dim();
        if buffer.is_empty() {
            return Self::identity(dim);
        }
        let n = buffer.len() as f64;
        let mut mean = vec![0.0; dim];
        for t in buffer.iter() {
            for (m, x) in mean.iter_mut().zip(t.state.iter().chain(&t.action)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for t in buffer.iter() {
            for ((v, x), m) in var.iter_mut().zip(t.state.iter().chain(&t.action)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        state
            .iter()
            .chain(action)
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Transition;

    #[test]
    fn constant_feature_keeps_unit_scale() {
        let mut b = ReplayBuffer::new(1, 1, None);
        for i in 0..4 {
            b.push(Transition {
                state: vec![i as f64],
                action: vec![0.5],
                next_state: vec![0.0],
                reward: 0.0,
            })
            .unwrap();
        }
        let n = Normalizer::from_buffer(&b);
        assert_eq!(n.std[1], 1.0);
        assert!((n.mean[0] - 1.5).abs() < 1e-15);
        let z = n.apply(&[1.5], &[0.5]);
        assert_eq!(z, vec![0.0, 0.0]);
    }
}
