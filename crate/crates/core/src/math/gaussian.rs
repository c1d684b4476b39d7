use serde::{Deserialize, Serialize};

use super::RngStream;
use crate::error::{Error, Result};

/// Entropy of a one-dimensional standard normal, `(ln 2π + 1) / 2`, in nats.
pub const UNIT_ENTROPY: f64 = 1.418_938_533_204_672_7;

/// Gaussian with diagonal covariance, stored as a mean/variance pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGaussian {
    mean: Vec<f64>,
    variance: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        if mean.len() != variance.len() {
            return Err(Error::InvalidGaussian(format!(
                "mean has {} entries but variance has {}",
                mean.len(),
                variance.len()
            )));
        }
        if let Some(i) = variance.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidGaussian(format!(
                "variance[{i}] = {} is not a positive finite number",
                variance[i]
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidGaussian("mean is not finite".into()));
        }
        Ok(Self { mean, variance })
    }

    /// Isotropic Gaussian `N(mean·1, std²·I)` of dimension `dim`.
    pub fn isotropic(dim: usize, mean: f64, std: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![std * std; dim])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn entropy(&self) -> f64 {
        gaussian_entropy(self)
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        gaussian_sample(self, rng)
    }
}

/// Differential entropy in nats: `(d/2)(ln 2π + 1) + ½ Σ ln σᵢ²`.
pub fn gaussian_entropy(dist: &DiagonalGaussian) -> f64 {
    let log_det: f64 = dist.variance.iter().map(|v| v.ln()).sum();
    dist.dim() as f64 * UNIT_ENTROPY + 0.5 * log_det
}

pub fn gaussian_sample(dist: &DiagonalGaussian, rng: &mut RngStream) -> Vec<f64> {
    dist.mean
        .iter()
        .zip(&dist.variance)
        .map(|(m, v)| m + v.sqrt() * rng.standard_normal())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_entropy_constant() {
        let expected = 0.5 * ((2.0 * std::f64::consts::PI).ln() + 1.0);
        assert!((UNIT_ENTROPY - expected).abs() < 1e-15);
    }

    #[test]
    fn standard_normal_entropy() {
        let g = DiagonalGaussian::new(vec![0.0], vec![1.0]).unwrap();
        assert!((g.entropy() - 1.418_938_5).abs() < 1e-7);
        let g2 = DiagonalGaussian::new(vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        assert!((g2.entropy() - 2.837_877_1).abs() < 1e-7);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(DiagonalGaussian::new(vec![0.0], vec![0.0]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0], vec![-1.0]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0], vec![f64::NAN]).is_err());
        assert!(DiagonalGaussian::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(DiagonalGaussian::new(vec![f64::INFINITY], vec![1.0]).is_err());
    }

    #[test]
    fn near_degenerate_samples_hug_the_mean() {
        let g = DiagonalGaussian::new(vec![0.3], vec![1e-12]).unwrap();
        let mut rng = RngStream::new(11, 0);
        for _ in 0..1000 {
            assert!((g.sample(&mut rng)[0] - 0.3).abs() < 1e-5);
        }
    }

    #[test]
    fn fresh_streams_give_identical_samples() {
        let g = DiagonalGaussian::new(vec![1.0, -1.0, 0.0], vec![0.5, 2.0, 1.0]).unwrap();
        let a = g.sample(&mut RngStream::new(42, 9));
        let b = g.sample(&mut RngStream::new(42, 9));
        assert_eq!(a, b);
    }

    #[test]
    fn empirical_variance_matches() {
        let g = DiagonalGaussian::new(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
        let mut rng = RngStream::new(5, 1);
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..n {
            let x = g.sample(&mut rng);
            for i in 0..2 {
                sum[i] += x[i];
                sq[i] += x[i] * x[i];
            }
        }
        for (i, target) in [1.0, 4.0].into_iter().enumerate() {
            let mean = sum[i] / n as f64;
            let var = sq[i] / n as f64 - mean * mean;
            assert!((var - target).abs() / target < 0.05, "dim {i}: {var}");
        }
    }
}
