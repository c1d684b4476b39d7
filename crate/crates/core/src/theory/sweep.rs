//! Seeded random instances for the bound, the stress suite and the
//! tightness sweep.
//!
//! An instance draws a true MDP (Dirichlet transition rows, rewards uniform
//! on `[−1, 1]`), an independent Dirichlet "alternative" row per `(s, a)`
//! and a uniform noise value per `(s, a)`. The model at perturbation scale
//! `λ` is `p̂ = (1−λ) p + λ q` and `r_m = r_e + λ · reward_noise · u`, so
//! scale 0 reproduces the environment exactly and every scale shares the
//! same random draws.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{greedy_policy, verify_bound, BoundReport, TabularDynamics, TabularMDP, TabularModel, TabularPolicy};
use crate::error::{Error, Result};
use crate::math::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    pub gammas: Vec<f64>,
    /// Perturbation scales `λ ∈ [0, 1]` drawn from uniformly.
    pub scales: Vec<f64>,
    /// Amplitude of the uniform reward noise at `λ = 1`.
    pub reward_noise: f64,
    /// Symmetric Dirichlet concentration for transition rows.
    pub dirichlet_alpha: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_states: 8,
            max_actions: 4,
            max_horizon: 10,
            gammas: vec![0.9, 0.99],
            scales: vec![0.0, 0.01, 0.05, 0.1, 0.2, 0.5],
            reward_noise: 0.5,
            dirichlet_alpha: 0.5,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.max_states < 1 || self.max_actions < 1 || self.max_horizon < 1 {
            return bad("max_states, max_actions and max_horizon must be >= 1".into());
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(0.0..1.0).contains(g)) {
            return bad(format!("gammas must be non-empty and lie in [0, 1): {:?}", self.gammas));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad(format!("scales must be non-empty and lie in [0, 1]: {:?}", self.scales));
        }
        if !(self.reward_noise >= 0.0) || !(self.dirichlet_alpha > 0.0) {
            return bad("reward_noise must be >= 0 and dirichlet_alpha > 0".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Random stochastic table.
    Random,
    /// Greedy with respect to the perturbed model.
    ModelGreedy,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::ModelGreedy => "model_greedy",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundInstance {
    pub index: usize,
    pub gamma: f64,
    pub horizon: usize,
    pub scale: f64,
    pub policy_kind: PolicyKind,
    pub s0: usize,
    pub a0: usize,
    pub mdp: TabularMDP,
    pub model: TabularModel,
    pub policy: TabularPolicy,
}

impl BoundInstance {
    pub fn verify(&self) -> Result<BoundReport> {
        verify_bound(&self.mdp, &self.model, &self.policy, self.s0, self.a0, self.horizon)
    }
}

/// Scale-independent draws shared by every perturbation of one instance.
struct BaseDraw {
    ns: usize,
    na: usize,
    p: Vec<f64>,
    r: Vec<f64>,
    q: Vec<f64>,
    u: Vec<f64>,
    random_policy: Vec<f64>,
    s0: usize,
    a0: usize,
}

fn dirichlet_row(dim: usize, alpha: f64, rng: &mut RngStream) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return draws.into_iter().map(|g| g / sum).collect();
        }
    }
}

fn draw_base(cfg: &GeneratorConfig, rng: &mut RngStream) -> BaseDraw {
    let ns = 1 + rng.index(cfg.max_states);
    let na = 1 + rng.index(cfg.max_actions);
    let pairs = ns * na;
    let p = (0..pairs)
        .flat_map(|_| dirichlet_row(ns, cfg.dirichlet_alpha, rng))
        .collect();
    let r = (0..pairs).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let q = (0..pairs)
        .flat_map(|_| dirichlet_row(ns, cfg.dirichlet_alpha, rng))
        .collect();
    let u = (0..pairs).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let random_policy = (0..ns).flat_map(|_| dirichlet_row(na, 1.0, rng)).collect();
    let s0 = rng.index(ns);
    let a0 = rng.index(na);
    BaseDraw {
        ns,
        na,
        p,
        r,
        q,
        u,
        random_policy,
        s0,
        a0,
    }
}

fn renormalize(rows: &mut [f64], width: usize) {
    for row in rows.chunks_exact_mut(width) {
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
    }
}

fn build(
    base: &BaseDraw,
    index: usize,
    scale: f64,
    gamma: f64,
    horizon: usize,
    kind: PolicyKind,
    reward_noise: f64,
) -> Result<BoundInstance> {
    let mut p = base.p.clone();
    renormalize(&mut p, base.ns);
    let mdp = TabularMDP::new(base.ns, base.na, p.clone(), base.r.clone(), gamma)?;
    let (p_hat, r_m) = if scale == 0.0 {
        (p, base.r.clone())
    } else {
        let mut mixed: Vec<f64> = p
            .iter()
            .zip(&base.q)
            .map(|(a, b)| (1.0 - scale) * a + scale * b)
            .collect();
        renormalize(&mut mixed, base.ns);
        let rewards = base
            .r
            .iter()
            .zip(&base.u)
            .map(|(r, u)| r + scale * reward_noise * u)
            .collect();
        (mixed, rewards)
    };
    let model = TabularModel::new(base.ns, base.na, p_hat, r_m)?;
    let policy = match kind {
        PolicyKind::Random => {
            let mut probs = base.random_policy.clone();
            renormalize(&mut probs, base.na);
            TabularPolicy::new(base.ns, base.na, probs)?
        }
        PolicyKind::ModelGreedy => greedy_policy(&model, gamma, horizon),
    };
    Ok(BoundInstance {
        index,
        gamma,
        horizon,
        scale,
        policy_kind: kind,
        s0: base.s0,
        a0: base.a0,
        mdp,
        model,
        policy,
    })
}

fn kind_for(index: usize) -> PolicyKind {
    if index % 2 == 0 {
        PolicyKind::Random
    } else {
        PolicyKind::ModelGreedy
    }
}

/// Instance `index` of the stress distribution: sizes, γ, `H` and the
/// scale are drawn from the stream `(seed, index)`; even indices use a
/// random policy and odd ones the model-greedy policy.
pub fn generate_instance(cfg: &GeneratorConfig, index: usize) -> Result<BoundInstance> {
    cfg.validate()?;
    let mut rng = RngStream::new(cfg.seed, 0).child(index as u64);
    let base = draw_base(cfg, &mut rng);
    let gamma = cfg.gammas[rng.index(cfg.gammas.len())];
    let horizon = 1 + rng.index(cfg.max_horizon);
    let scale = cfg.scales[rng.index(cfg.scales.len())];
    build(&base, index, scale, gamma, horizon, kind_for(index), cfg.reward_noise)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressRecord {
    pub index: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub horizon: usize,
    pub scale: f64,
    pub policy: PolicyKind,
    pub report: BoundReport,
}

impl StressRecord {
    /// `tree_error / bound`; `None` when the bound is exactly zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.report.bound_value > 0.0).then(|| self.report.tree_error / self.report.bound_value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressSummary {
    pub instances: usize,
    pub failures: usize,
    /// Instances whose bound is exactly zero.
    pub zero_bound_cases: usize,
    /// Zero-bound instances whose tree error is exactly zero as well.
    pub zero_equalities: usize,
    pub max_ratio: Option<f64>,
    pub records: Vec<StressRecord>,
}

/// Verifies `count` independent instances in parallel.
pub fn stress_suite(cfg: &GeneratorConfig, count: usize) -> Result<StressSummary> {
    cfg.validate()?;
    let records = (0..count)
        .into_par_iter()
        .map(|i| {
            let inst = generate_instance(cfg, i)?;
            let report = inst.verify()?;
            Ok(StressRecord {
                index: i,
                num_states: inst.mdp.num_states(),
                num_actions: inst.mdp.num_actions(),
                gamma: inst.gamma,
                horizon: inst.horizon,
                scale: inst.scale,
                policy: inst.policy_kind,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = records.iter().filter(|r| !r.report.holds).count();
    let zero: Vec<&StressRecord> = records.iter().filter(|r| r.report.bound_value == 0.0).collect();
    let zero_equalities = zero.iter().filter(|r| r.report.tree_error == 0.0).count();
    let max_ratio = records.iter().filter_map(StressRecord::ratio).reduce(f64::max);
    Ok(StressSummary {
        instances: records.len(),
        failures,
        zero_bound_cases: zero.len(),
        zero_equalities,
        max_ratio,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub generator: GeneratorConfig,
    pub horizons: Vec<usize>,
    pub instances_per_cell: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            horizons: vec![1, 3, 5, 10],
            instances_per_cell: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub horizon: usize,
    pub scale: f64,
    pub instances: usize,
    /// Instances with a zero bound and zero tree error (ratio undefined).
    pub zero_cases: usize,
    pub mean_tree_error: f64,
    pub mean_abs_tree_error: f64,
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub violations: usize,
}

/// One row per `(γ, H, scale)`. The same base instances are reused in
/// every cell, so differences across scales come from the perturbation
/// alone.
pub fn tightness_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let g = &cfg.generator;
    g.validate()?;
    if cfg.horizons.is_empty() || cfg.horizons.contains(&0) || cfg.instances_per_cell == 0 {
        return Err(Error::InvalidConfig(
            "sweep needs non-empty horizons >= 1 and instances_per_cell >= 1".into(),
        ));
    }
    let root = RngStream::new(g.seed, 1);
    let bases: Vec<BaseDraw> = (0..cfg.instances_per_cell)
        .map(|j| draw_base(g, &mut root.child(j as u64)))
        .collect();

    let mut cells = Vec::new();
    for &gamma in &g.gammas {
        for &horizon in &cfg.horizons {
            for &scale in &g.scales {
                cells.push((gamma, horizon, scale));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(gamma, horizon, scale)| {
            let mut reports = Vec::with_capacity(bases.len());
            for (j, base) in bases.iter().enumerate() {
                let inst = build(base, j, scale, gamma, horizon, kind_for(j), g.reward_noise)?;
                reports.push(inst.verify()?);
            }
            let n = reports.len() as f64;
            let ratios: Vec<f64> = reports
                .iter()
                .filter(|r| r.bound_value > 0.0)
                .map(|r| r.tree_error / r.bound_value)
                .collect();
            Ok(SweepRow {
                gamma,
                horizon,
                scale,
                instances: reports.len(),
                zero_cases: reports
                    .iter()
                    .filter(|r| r.bound_value == 0.0 && r.tree_error == 0.0)
                    .count(),
                mean_tree_error: reports.iter().map(|r| r.tree_error).sum::<f64>() / n,
                mean_abs_tree_error: reports.iter().map(|r| r.tree_error.abs()).sum::<f64>() / n,
                mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
                max_ratio: ratios.iter().copied().reduce(f64::max),
                violations: reports.iter().filter(|r| !r.holds).count(),
            })
        })
        .collect()
}
