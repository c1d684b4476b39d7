use serde::{Deserialize, Serialize};

use super::{TabularDynamics, TabularMDP, TabularModel, TabularPolicy};
use crate::error::{Error, Result};

/// Slack allowed on `tree_error ≤ bound` for floating-point round-off.
pub const HOLDS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `J_env − J_model` (signed).
    pub tree_error: f64,
    pub bound_value: f64,
    pub epsilon_r_max: f64,
    pub epsilon_m: f64,
    pub r_max: f64,
    /// `(1−γ^H) ε_r / (1−γ)`.
    pub reward_gap_term: f64,
    /// `2 r_max (γ−γ^H) ε_m / (1−γ)`.
    pub model_error_term: f64,
    pub holds: bool,
}

fn check_shapes<D: TabularDynamics + ?Sized>(
    d: &D,
    policy: &TabularPolicy,
    s0: usize,
    a0: usize,
    horizon: usize,
) -> Result<()> {
    if policy.num_states() != d.num_states() || policy.num_actions() != d.num_actions() {
        return Err(Error::DimensionMismatch {
            context: "policy shape",
            expected: d.num_states() * d.num_actions(),
            got: policy.num_states() * policy.num_actions(),
        });
    }
    if s0 >= d.num_states() || a0 >= d.num_actions() {
        return Err(Error::InvalidConfig(format!("start pair ({s0}, {a0}) out of range")));
    }
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    Ok(())
}

/// Exact `E[Σ_{t<H} γ^t r(s_t, a_t)]` with `(s₀, a₀)` fixed and
/// `a_t ~ π(·|s_t)` afterwards, by propagating the state-action occupancy.
pub fn expected_return<D: TabularDynamics + ?Sized>(
    dynamics: &D,
    policy: &TabularPolicy,
    s0: usize,
    a0: usize,
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    check_shapes(dynamics, policy, s0, a0, horizon)?;
    let (ns, na) = (dynamics.num_states(), dynamics.num_actions());
    let mut occ = vec![0.0; ns * na];
    occ[s0 * na + a0] = 1.0;
    let mut total = 0.0;
    let mut discount = 1.0;
    for t in 0..horizon {
        let mut step = 0.0;
        for s in 0..ns {
            for a in 0..na {
                step += occ[s * na + a] * dynamics.reward(s, a);
            }
        }
        total += discount * step;
        discount *= gamma;
        if t + 1 == horizon {
            break;
        }
        let mut next_state = vec![0.0; ns];
        for s in 0..ns {
            for a in 0..na {
                let w = occ[s * na + a];
                if w == 0.0 {
                    continue;
                }
                for (n, v) in next_state.iter_mut().enumerate() {
                    *v += w * dynamics.prob(s, a, n);
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                occ[s * na + a] = next_state[s] * policy.prob(s, a);
            }
        }
    }
    Ok(total)
}

/// `max_{s,a} TV(p(·|s,a), p̂(·|s,a))`.
pub fn model_error_tv<D: TabularDynamics + ?Sized, M: TabularDynamics + ?Sized>(env: &D, model: &M) -> f64 {
    let (ns, na) = (env.num_states(), env.num_actions());
    let mut worst = 0.0f64;
    for s in 0..ns {
        for a in 0..na {
            let tv: f64 = (0..ns)
                .map(|n| (env.prob(s, a, n) - model.prob(s, a, n)).abs())
                .sum::<f64>()
                * 0.5;
            worst = worst.max(tv);
        }
    }
    worst
}

/// `max_{s,a} |r_e(s,a) − r_m(s,a)|`.
pub fn reward_gap_max<D: TabularDynamics + ?Sized, M: TabularDynamics + ?Sized>(env: &D, model: &M) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..env.num_states() {
        for a in 0..env.num_actions() {
            worst = worst.max((env.reward(s, a) - model.reward(s, a)).abs());
        }
    }
    worst
}

/// Computes both returns exactly and evaluates the bound. `γ = 1` is
/// rejected: the bound divides by `1 − γ`.
pub fn verify_bound(
    mdp: &TabularMDP,
    model: &TabularModel,
    policy: &TabularPolicy,
    s0: usize,
    a0: usize,
    horizon: usize,
) -> Result<BoundReport> {
    let gamma = mdp.gamma();
    if gamma >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "the bound requires gamma < 1, got {gamma}"
        )));
    }
    if model.num_states() != mdp.num_states() || model.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch {
            context: "model shape",
            expected: mdp.num_states() * mdp.num_actions(),
            got: model.num_states() * model.num_actions(),
        });
    }
    let j_env = expected_return(mdp, policy, s0, a0, gamma, horizon)?;
    let j_model = expected_return(model, policy, s0, a0, gamma, horizon)?;
    let tree_error = j_env - j_model;

    let epsilon_r_max = reward_gap_max(mdp, model);
    let epsilon_m = model_error_tv(mdp, model);
    let r_max = mdp.tables().rewards().iter().fold(0.0f64, |m, r| m.max(r.abs()));

    let gh = gamma.powi(horizon as i32);
    let reward_gap_term = (1.0 - gh) * epsilon_r_max / (1.0 - gamma);
    let model_error_term = 2.0 * r_max * (gamma - gh) * epsilon_m / (1.0 - gamma);
    let bound_value = reward_gap_term + model_error_term;
    Ok(BoundReport {
        tree_error,
        bound_value,
        epsilon_r_max,
        epsilon_m,
        r_max,
        reward_gap_term,
        model_error_term,
        holds: tree_error <= bound_value + HOLDS_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(leak: f64) -> TabularModel {
        // State 0 rewards 1 and stays; state 1 is absorbing with reward 0.
        TabularModel::new(2, 1, vec![1.0 - leak, leak, 0.0, 1.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn identical_model_gives_zero_error_and_zero_bound() {
        let mdp = chain(0.0).with_gamma(0.9).unwrap();
        let r = verify_bound(&mdp, &chain(0.0), &TabularPolicy::uniform(2, 1), 0, 0, 7).unwrap();
        assert_eq!(r.tree_error, 0.0);
        assert_eq!(r.bound_value, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn geometric_chain_return() {
        let mdp = chain(0.0).with_gamma(0.5).unwrap();
        let j = expected_return(&mdp, &TabularPolicy::uniform(2, 1), 0, 0, 0.5, 4).unwrap();
        assert!((j - 1.875).abs() < 1e-15);
    }

    #[test]
    fn gamma_one_is_rejected() {
        let mdp = chain(0.0).with_gamma(1.0).unwrap();
        assert!(verify_bound(&mdp, &chain(0.0), &TabularPolicy::uniform(2, 1), 0, 0, 3).is_err());
    }

    #[test]
    fn compounding_leak_exceeds_the_bound() {
        // The model leaks ε per step out of the rewarding state, so its
        // return falls short by about Σ_t γ^t (1 − (1−ε)^t), which grows
        // quadratically in t while the bound's model term is linear.
        let eps = 0.1;
        let (gamma, h) = (0.99, 50);
        let mdp = chain(0.0).with_gamma(gamma).unwrap();
        let r = verify_bound(&mdp, &chain(eps), &TabularPolicy::uniform(2, 1), 0, 0, h).unwrap();
        assert!((r.epsilon_m - eps).abs() < 1e-15);
        assert_eq!(r.epsilon_r_max, 0.0);
        assert!(r.tree_error > r.bound_value, "{r:?}");
        assert!(!r.holds);
    }

    #[test]
    fn start_pair_and_horizon_validated() {
        let mdp = chain(0.0).with_gamma(0.9).unwrap();
        let pi = TabularPolicy::uniform(2, 1);
        assert!(verify_bound(&mdp, &chain(0.0), &pi, 2, 0, 3).is_err());
        assert!(verify_bound(&mdp, &chain(0.0), &pi, 0, 1, 3).is_err());
        assert!(verify_bound(&mdp, &chain(0.0), &pi, 0, 0, 0).is_err());
    }
}
