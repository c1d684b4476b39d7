//! Two-component principal component analysis for low-dimensional point
//! clouds (executed actions), via eigendecomposition of the sample
//! covariance.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pca2 {
    pub mean: Vec<f64>,
    /// Unit eigenvectors for the two largest eigenvalues, largest first.
    pub components: [Vec<f64>; 2],
    pub eigenvalues: [f64; 2],
    /// Trace of the covariance matrix (sum of all eigenvalues).
    pub total_variance: f64,
    /// Centered points dotted with each component.
    pub projected: Vec<[f64; 2]>,
}

impl Pca2 {
    pub fn explained_variance_ratio(&self) -> [f64; 2] {
        [
            self.eigenvalues[0] / self.total_variance,
            self.eigenvalues[1] / self.total_variance,
        ]
    }

    /// Projects arbitrary points with the fitted mean and components.
    pub fn project(&self, point: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, c) in self.components.iter().enumerate() {
            out[k] = point.iter().zip(&self.mean).zip(c).map(|((x, m), w)| (x - m) * w).sum();
        }
        out
    }
}

/// Axis-aligned bounding-box area of a set of 2D points.
pub fn bounding_box_area(points: &[[f64; 2]]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]) * (hi[1] - lo[1])
}

pub fn pca_top2(points: &[Vec<f64>]) -> Result<Pca2> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim < 2 {
        return Err(Error::DegenerateData(format!("need dimension >= 2, got {dim}")));
    }
    for p in points {
        crate::error::ensure_dim("pca point", dim, p.len())?;
        crate::error::ensure_finite("pca point", p)?;
    }

    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for p in points {
        for i in 0..dim {
            let di = p[i] - mean[i];
            for j in i..dim {
                cov[(i, j)] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let total_variance = cov.trace();
    let scale = mean.iter().fold(1.0f64, |acc, m| acc.max(m.abs()));
    if total_variance <= f64::EPSILON * scale * scale {
        return Err(Error::DegenerateData("all points are identical (zero variance)".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let component = |k: usize| -> Vec<f64> {
        let col = eig.eigenvectors.column(order[k]);
        let mut v: Vec<f64> = col.iter().copied().collect();
        // Sign convention: largest-magnitude entry positive.
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };

    let mut pca = Pca2 {
        mean,
        components: [component(0), component(1)],
        eigenvalues: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]].max(0.0)],
        total_variance,
        projected: Vec::new(),
    };
    pca.projected = points.iter().map(|p| pca.project(p)).collect();
    Ok(pca)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_cloud() {
        let pts: Vec<Vec<f64>> = vec![vec![-3.0, 0.5], vec![3.0, 0.5], vec![-1.0, -0.5], vec![1.0, -0.5]];
        let pca = pca_top2(&pts).unwrap();
        assert!((pca.components[0][0].abs() - 1.0).abs() < 1e-12);
        assert!(pca.components[0][1].abs() < 1e-12);
        assert!((pca.components[1][1].abs() - 1.0).abs() < 1e-12);
        assert!(pca.eigenvalues[0] > pca.eigenvalues[1]);
    }

    #[test]
    fn rank_one_data() {
        let pts: Vec<Vec<f64>> = (-3..=3).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let pca = pca_top2(&pts).unwrap();
        assert!(pca.eigenvalues[1].abs() < 1e-12);
        let ratio = pca.explained_variance_ratio();
        assert!((ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![vec![0.2, -0.4]; 10];
        assert!(matches!(pca_top2(&pts), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn too_few_points_or_dims() {
        assert!(pca_top2(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(pca_top2(&[vec![0.0], vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn bbox_area() {
        assert_eq!(bounding_box_area(&[[0.0, 0.0], [2.0, 1.0], [1.0, -1.0]]), 4.0);
        assert_eq!(bounding_box_area(&[]), 0.0);
    }
}
