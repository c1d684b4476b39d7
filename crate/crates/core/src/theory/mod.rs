//! Exact verification of the trajectory reward estimation (TREE) error
//! bound on small tabular MDPs.
//!
//! For a true MDP `(p, r_e, γ)`, a model `(p̂, r_m)` and a stochastic
//! policy π, the finite-horizon returns from a fixed `(s₀, a₀)` are computed
//! exactly by propagating the state-action occupancy. The difference
//! `J_env − J_model` is compared with
//! `(1−γ^H) ε_r / (1−γ) + 2 r_max (γ − γ^H) ε_m / (1−γ)`.

mod bound;
mod sweep;
mod tabular;

pub use bound::{expected_return, model_error_tv, reward_gap_max, verify_bound, BoundReport, HOLDS_TOLERANCE};
pub use sweep::{
    generate_instance, stress_suite, tightness_sweep, BoundInstance, GeneratorConfig, PolicyKind, StressRecord,
    StressSummary, SweepConfig, SweepRow,
};
pub use tabular::{greedy_policy, TabularDynamics, TabularMDP, TabularModel, TabularPolicy};
