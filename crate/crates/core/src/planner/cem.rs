use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rollout, temperature, DynamicsModel, EliteFit, ExplorationSchedule, PlanConfig, RewardModel};
use crate::envs::ActionBounds;
use crate::error::{ensure_dim, Error, Result};
use crate::math::{DiagonalGaussian, RngStream};

/// Per-timestep diagonal Gaussian over actions.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSequenceDistribution {
    steps: Vec<DiagonalGaussian>,
    variance_floor: f64,
}

impl ActionSequenceDistribution {
    /// `μ = μ₀`, `Σ = σ₀² I` at every timestep.
    pub fn new(horizon: usize, action_dim: usize, mu0: f64, sigma0: f64, variance_floor: f64) -> Result<Self> {
        let var = (sigma0 * sigma0).max(variance_floor);
        let step = DiagonalGaussian::new(vec![mu0; action_dim], vec![var; action_dim])?;
        Ok(Self {
            steps: vec![step; horizon],
            variance_floor,
        })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[DiagonalGaussian] {
        &self.steps
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.mean().to_vec()).collect()
    }

    pub fn variances(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.variance().to_vec()).collect()
    }

    /// Draws one action sequence, clipped into `bounds`.
    pub fn sample(&self, bounds: &ActionBounds, rng: &mut RngStream) -> Vec<Vec<f64>> {
        self.steps.iter().map(|g| bounds.clip(&g.sample(rng)).0).collect()
    }

    /// Fits per-timestep elite mean `μ'` and variance `Σ'` (maximum
    /// likelihood), then smooths `μ ← (1−α)μ + αμ'`, `Σ ← (1−α)Σ + αΣ'`.
    /// Returns the fitted `μ'` for each refit timestep.
    pub fn refit(&mut self, elites: &[&[Vec<f64>]], alpha: f64, fit: EliteFit) -> Vec<Vec<f64>> {
        if elites.is_empty() {
            return Vec::new();
        }
        let n = elites.len() as f64;
        let refit_steps = match fit {
            EliteFit::FullSequence => self.steps.len(),
            EliteFit::FirstAction => self.steps.len().min(1),
        };
        let mut fitted = Vec::with_capacity(refit_steps);
        for t in 0..refit_steps {
            let dim = self.steps[t].dim();
            let mut mean = vec![0.0; dim];
            for e in elites {
                for (m, a) in mean.iter_mut().zip(&e[t]) {
                    *m += a;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; dim];
            for e in elites {
                for ((v, a), m) in var.iter_mut().zip(&e[t]).zip(&mean) {
                    *v += (a - m) * (a - m);
                }
            }
            var.iter_mut().for_each(|v| *v /= n);

            let old = &self.steps[t];
            let new_mean: Vec<f64> = old
                .mean()
                .iter()
                .zip(&mean)
                .map(|(o, f)| (1.0 - alpha) * o + alpha * f)
                .collect();
            let new_var: Vec<f64> = old
                .variance()
                .iter()
                .zip(&var)
                .map(|(o, f)| ((1.0 - alpha) * o + alpha * f).max(self.variance_floor))
                .collect();
            self.steps[t] =
                DiagonalGaussian::new(new_mean, new_var).expect("convex combination of valid parameters stays valid");
            fitted.push(mean);
        }
        fitted
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub best_return: f64,
    pub elite_mean_return: f64,
    pub elite_std_return: f64,
    pub invalid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub epoch: usize,
    pub beta: f64,
    pub iterations: usize,
    /// Best return over all iterations (the returned trajectory's score).
    pub best_return: f64,
    pub per_iteration: Vec<IterationStats>,
}

impl PlanDiagnostics {
    pub fn final_elite_mean(&self) -> f64 {
        self.per_iteration.last().map_or(f64::NAN, |s| s.elite_mean_return)
    }

    pub fn final_elite_std(&self) -> f64 {
        self.per_iteration.last().map_or(f64::NAN, |s| s.elite_std_return)
    }
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub action: Vec<f64>,
    /// Full action sequence of the best trajectory.
    pub best_sequence: Vec<Vec<f64>>,
    pub diagnostics: PlanDiagnostics,
    /// Distribution after the last update.
    pub distribution: ActionSequenceDistribution,
}

/// One MPC decision. Candidate `c` of iteration `i` draws its actions and
/// ensemble member from `rng.child(i).child(c)`, so the result does not
/// depend on how rollouts are scheduled across threads.
#[allow(clippy::too_many_arguments)]
pub fn plan_action<M, R>(
    model: &M,
    reward: &R,
    s0: &[f64],
    epoch: usize,
    cfg: &PlanConfig,
    schedule: &ExplorationSchedule,
    bounds: &ActionBounds,
    rng: &RngStream,
) -> Result<PlanOutcome>
where
    M: DynamicsModel + ?Sized,
    R: RewardModel + ?Sized,
{
    cfg.validate()?;
    ensure_dim("plan action bounds", model.action_dim(), bounds.dim())?;
    let beta = temperature(schedule, epoch);
    let mut dist =
        ActionSequenceDistribution::new(cfg.horizon, model.action_dim(), cfg.mu0, cfg.sigma0, cfg.variance_floor)?;

    let members = model.num_members();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut per_iteration = Vec::new();

    for iter in 0..cfg.max_iterations {
        let iter_rng = rng.child(iter as u64);
        let candidates: Vec<(Vec<Vec<f64>>, f64)> = (0..cfg.candidates)
            .into_par_iter()
            .map(|c| -> Result<(Vec<Vec<f64>>, f64)> {
                let mut stream = iter_rng.child(c as u64);
                let actions = dist.sample(bounds, &mut stream);
                let member = stream.index(members);
                let mut traj = rollout(model, reward, s0, &actions, member, &mut stream)?;
                let j = traj.assign_return(beta, cfg.gamma);
                Ok((actions, j))
            })
            .collect::<Result<_>>()?;

        let invalid = candidates.iter().filter(|(_, j)| !j.is_finite()).count();
        if invalid == candidates.len() {
            return Err(Error::PlanningFailure(candidates.len()));
        }

        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&a, &b| candidates[b].1.total_cmp(&candidates[a].1).then(a.cmp(&b)));
        let elites: Vec<usize> = order
            .iter()
            .copied()
            .take(cfg.elite_count)
            .filter(|&i| candidates[i].1.is_finite())
            .collect();

        let elite_returns: Vec<f64> = elites.iter().map(|&i| candidates[i].1).collect();
        let n = elite_returns.len() as f64;
        let mean = elite_returns.iter().sum::<f64>() / n;
        let var = elite_returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        let iter_best = candidates[order[0]].1;

        let previous_best = best.as_ref().map(|b| b.0);
        if previous_best.is_none_or(|b| iter_best > b) {
            best = Some((iter_best, candidates[order[0]].0.clone()));
        }

        let elite_seqs: Vec<&[Vec<f64>]> = elites.iter().map(|&i| candidates[i].0.as_slice()).collect();
        dist.refit(&elite_seqs, cfg.alpha, cfg.elite_fit);

        per_iteration.push(IterationStats {
            best_return: iter_best,
            elite_mean_return: mean,
            elite_std_return: var.sqrt(),
            invalid,
        });

        if let Some(prev) = previous_best {
            let improvement = (iter_best - prev).max(0.0);
            if improvement < cfg.convergence_tol {
                break;
            }
        }
    }

    let (best_return, best_sequence) = best.expect("at least one iteration ran");
    Ok(PlanOutcome {
        action: best_sequence[0].clone(),
        best_sequence,
        diagnostics: PlanDiagnostics {
            epoch,
            beta,
            iterations: per_iteration.len(),
            best_return,
            per_iteration,
        },
        distribution: dist,
    })
}
