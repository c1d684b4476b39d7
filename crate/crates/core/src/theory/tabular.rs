use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;

/// Read access shared by the true MDP and the model.
pub trait TabularDynamics {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// `p(s' | s, a)`.
    fn prob(&self, s: usize, a: usize, next: usize) -> f64;
    fn reward(&self, s: usize, a: usize) -> f64;

    /// The row `p(· | s, a)`.
    fn row(&self, s: usize, a: usize) -> Vec<f64> {
        (0..self.num_states()).map(|n| self.prob(s, a, n)).collect()
    }
}

fn check_stochastic(what: &str, data: &[f64], rows: usize, width: usize) -> Result<()> {
    if data.len() != rows * width {
        return Err(Error::InvalidConfig(format!(
            "{what}: expected {} entries, got {}",
            rows * width,
            data.len()
        )));
    }
    for (i, row) in data.chunks_exact(width).enumerate() {
        if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{what}: row {i} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(Error::InvalidConfig(format!("{what}: row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Learned model: transition tensor `p̂` (`S×A×S`, row-major) and reward
/// table `r_m` (`S×A`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularModel {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

impl TabularModel {
    pub fn new(num_states: usize, num_actions: usize, transition: Vec<f64>, reward: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidConfig(
                "tabular model needs at least one state and action".into(),
            ));
        }
        check_stochastic("transition", &transition, num_states * num_actions, num_states)?;
        if reward.len() != num_states * num_actions || reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "reward table must hold {} finite entries",
                num_states * num_actions
            )));
        }
        Ok(Self {
            num_states,
            num_actions,
            transition,
            reward,
        })
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    /// Same dynamics with every reward multiplied by `c`.
    pub fn scaled_rewards(&self, c: f64) -> Self {
        Self {
            reward: self.reward.iter().map(|r| r * c).collect(),
            ..self.clone()
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Result<TabularMDP> {
        TabularMDP::from_model(self, gamma)
    }
}

impl TabularDynamics for TabularModel {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + next]
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }
}

/// True environment: dynamics `p`, reward `r_e` and discount `γ ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMDP {
    tables: TabularModel,
    gamma: f64,
}

impl TabularMDP {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        Self::from_model(TabularModel::new(num_states, num_actions, transition, reward)?, gamma)
    }

    pub fn from_model(tables: TabularModel, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(Self { tables, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tables(&self) -> &TabularModel {
        &self.tables
    }
}

impl TabularDynamics for TabularMDP {
    fn num_states(&self) -> usize {
        self.tables.num_states
    }

    fn num_actions(&self) -> usize {
        self.tables.num_actions
    }

    fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.tables.prob(s, a, next)
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        self.tables.reward(s, a)
    }
}

/// Stochastic policy table `π(a | s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        check_stochastic("policy", &probs, num_states, num_actions)?;
        Ok(Self {
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            num_states,
            num_actions,
            probs: vec![p; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }
}

/// Deterministic policy maximising the `horizon`-step discounted Q-values of
/// `dynamics` (lowest action index on ties).
pub fn greedy_policy<D: TabularDynamics + ?Sized>(dynamics: &D, gamma: f64, horizon: usize) -> TabularPolicy {
    let (ns, na) = (dynamics.num_states(), dynamics.num_actions());
    let mut value = vec![0.0; ns];
    let mut q = vec![0.0; ns * na];
    for _ in 0..horizon.max(1) {
        for s in 0..ns {
            for a in 0..na {
                let future: f64 = (0..ns).map(|n| dynamics.prob(s, a, n) * value[n]).sum();
                q[s * na + a] = dynamics.reward(s, a) + gamma * future;
            }
        }
        for s in 0..ns {
            value[s] = q[s * na..(s + 1) * na]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut probs = vec![0.0; ns * na];
    for s in 0..ns {
        let row = &q[s * na..(s + 1) * na];
        let best = (0..na).fold(0, |b, a| if row[a] > row[b] { a } else { b });
        probs[s * na + best] = 1.0;
    }
    TabularPolicy {
        num_states: ns,
        num_actions: na,
        probs,
    }
}
