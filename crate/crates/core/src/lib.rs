//! Model-based reinforcement learning with entropy-driven progressive
//! exploration.
//!
//! The crate is organised bottom-up:
//!
//! - [`math`]: diagonal Gaussians, entropy, seeded RNG streams, PCA.
//! - [`nn`]: a small feedforward network with exact backpropagation and Adam.
//! - [`dynamics`]: probabilistic ensemble dynamics model, reward network,
//!   replay buffer and training.
//! - [`planner`]: CEM/MPC planning with an entropy bonus and a linear
//!   exploration-temperature schedule.
//! - [`envs`]: analytic continuous-control environments.
//! - [`agent`]: the interaction/training loop and policy evaluation.
//! - [`theory`]: exact tabular verification of the trajectory reward
//!   estimation error bound.

pub mod agent;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod math;
pub mod nn;
pub mod planner;
pub mod theory;

pub use error::{Error, Result};
