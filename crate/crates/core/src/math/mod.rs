//! Numerical primitives shared by the learner, planner and analysis code.

mod gaussian;
mod pca;
mod rng;

pub use gaussian::{gaussian_entropy, gaussian_sample, DiagonalGaussian, UNIT_ENTROPY};
pub use pca::{bounding_box_area, pca_top2, Pca2};
pub use rng::RngStream;
