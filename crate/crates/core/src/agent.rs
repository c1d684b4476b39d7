//! The interaction loop: act (random during warmup, planned afterwards),
//! record every transition, retrain the models on the whole buffer at the end
//! of each epoch, and report one [`EpochRecord`] per epoch.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    train_models, EnsembleModel, ModelConfig, ReplayBuffer, RewardNet, TrainConfig, TrainingReport, Transition,
};
use crate::envs::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::math::RngStream;
use crate::planner::{plan_action, temperature, DynamicsModel, ExplorationSchedule, PlanConfig, RewardModel};

/// Stream ids derived from the run seed.
pub mod streams {
    pub const MODEL_INIT: u64 = 1;
    pub const REWARD_INIT: u64 = 2;
    pub const ENV_RESET: u64 = 3;
    pub const WARMUP: u64 = 4;
    pub const PLAN: u64 = 5;
    pub const TRAIN: u64 = 6;
    pub const EVAL: u64 = 7;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub steps_per_epoch: usize,
    pub total_epochs: usize,
    /// Epochs of uniform random actions before planning starts.
    pub warmup_epochs: usize,
    /// Episodes of the final exploitation-only evaluation (0 to skip).
    pub eval_episodes: usize,
    /// Threads used for rollouts and member training. Results do not
    /// depend on this.
    pub workers: usize,
    pub env: EnvConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub plan: PlanConfig,
    pub schedule: ExplorationSchedule,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.warmup_epochs < 1 {
            return bad("warmup_epochs must be >= 1");
        }
        if self.total_epochs <= self.warmup_epochs {
            return bad("total_epochs must exceed warmup_epochs");
        }
        if self.steps_per_epoch == 0 {
            return bad("steps_per_epoch must be >= 1");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        self.model.validate()?;
        self.train.validate()?;
        self.plan.validate()?;
        self.schedule.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sum of true environment rewards collected during the epoch.
    pub true_return: f64,
    pub episodes_completed: usize,
    pub beta: f64,
    pub buffer_size: usize,
    /// Models were trained right after this epoch's interaction.
    pub trained_after_epoch: usize,
    pub model_loss_mean: Option<f64>,
    pub reward_mse: Option<f64>,
    /// Means over the epoch's planning calls; absent in warmup epochs.
    pub planner_best_return: Option<f64>,
    pub planner_iterations_mean: Option<f64>,
    pub planner_elite_mean: Option<f64>,
    pub planner_elite_std: Option<f64>,
    pub clipped_actions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation (0 for a single episode).
    pub std: f64,
}

impl EvalSummary {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let n = returns.len().max(1) as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        Self {
            returns,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Hooks for streaming results out of a run as they happen.
pub trait RunObserver: Send {
    fn on_action(&mut self, _epoch: usize, _step: usize, _action: &[f64]) -> Result<()> {
        Ok(())
    }

    fn on_epoch(&mut self, _record: &EpochRecord) -> Result<()> {
        Ok(())
    }
}

impl RunObserver for () {}

pub struct RunOutcome {
    pub records: Vec<EpochRecord>,
    pub training: Vec<TrainingReport>,
    pub ensemble: EnsembleModel,
    pub reward: RewardNet,
    pub buffer: ReplayBuffer,
    pub final_eval: Option<EvalSummary>,
}

pub fn run(config: &RunConfig) -> Result<Vec<EpochRecord>> {
    Ok(run_with_observer(config, &mut ())?.records)
}

pub fn run_with_observer(config: &RunConfig, observer: &mut dyn RunObserver) -> Result<RunOutcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_inner(config, observer))
}

fn run_inner(config: &RunConfig, observer: &mut dyn RunObserver) -> Result<RunOutcome> {
    let seed = config.seed;
    let mut env = Environment::from_config(&config.env)?;
    let (sd, ad) = (env.state_dim(), env.action_dim());
    let bounds = env.action_bounds().clone();

    let mut ensemble = EnsembleModel::new(&config.model, sd, ad, &RngStream::new(seed, streams::MODEL_INIT))?;
    let mut reward = RewardNet::new(&config.model, sd, ad, &mut RngStream::new(seed, streams::REWARD_INIT));
    let mut buffer = ReplayBuffer::new(sd, ad, None);

    let reset_root = RngStream::new(seed, streams::ENV_RESET);
    let warmup_root = RngStream::new(seed, streams::WARMUP);
    let plan_root = RngStream::new(seed, streams::PLAN);
    let train_root = RngStream::new(seed, streams::TRAIN);

    let mut episode = 0u64;
    let mut state = env.reset(&mut reset_root.child(episode));
    let mut records = Vec::with_capacity(config.total_epochs);
    let mut training = Vec::with_capacity(config.total_epochs);
    let mut global_step = 0u64;

    for epoch in 0..config.total_epochs {
        let beta = temperature(&config.schedule, epoch);
        let planning = epoch >= config.warmup_epochs;
        let mut true_return = 0.0;
        let mut episodes_completed = 0;
        let mut clipped_actions = 0;
        let (mut best_sum, mut iter_sum, mut elite_mean_sum, mut elite_std_sum) = (0.0, 0.0, 0.0, 0.0);

        for step in 0..config.steps_per_epoch {
            let action = if planning {
                let out = plan_action(
                    &ensemble,
                    &reward,
                    &state,
                    epoch,
                    &config.plan,
                    &config.schedule,
                    &bounds,
                    &plan_root.child(epoch as u64).child(step as u64),
                )
                .map_err(|e| Error::AtStep {
                    epoch,
                    step,
                    source: Box::new(e),
                })?;
                let d = &out.diagnostics;
                best_sum += d.best_return;
                iter_sum += d.iterations as f64;
                elite_mean_sum += d.final_elite_mean();
                elite_std_sum += d.final_elite_std();
                out.action
            } else {
                bounds.sample_uniform(&mut warmup_root.child(global_step))
            };
            observer.on_action(epoch, step, &action)?;

            let out = env.step(&action)?;
            clipped_actions += out.clipped as usize;
            true_return += out.reward;
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action,
                next_state: out.next_state.clone(),
                reward: out.reward,
            })?;
            state = out.next_state;
            if out.done {
                episodes_completed += 1;
                episode += 1;
                state = env.reset(&mut reset_root.child(episode));
            }
            global_step += 1;
        }

        let report = train_models(
            &mut ensemble,
            &mut reward,
            &buffer,
            &config.train,
            &train_root.child(epoch as u64),
        )?;
        let n = config.steps_per_epoch as f64;
        let record = EpochRecord {
            epoch,
            true_return,
            episodes_completed,
            beta,
            buffer_size: buffer.len(),
            trained_after_epoch: epoch,
            model_loss_mean: report.final_loss_mean(),
            reward_mse: report.final_reward_mse(),
            planner_best_return: planning.then_some(best_sum / n),
            planner_iterations_mean: planning.then_some(iter_sum / n),
            planner_elite_mean: planning.then_some(elite_mean_sum / n),
            planner_elite_std: planning.then_some(elite_std_sum / n),
            clipped_actions,
        };
        observer.on_epoch(&record)?;
        records.push(record);
        training.push(report);
    }

    let final_eval = if config.eval_episodes > 0 {
        let mut eval_env = Environment::from_config(&config.env)?;
        Some(evaluate_policy(
            &ensemble,
            &reward,
            &mut eval_env,
            config.eval_episodes,
            &config.plan,
            &RngStream::new(seed, streams::EVAL),
        )?)
    } else {
        None
    };

    Ok(RunOutcome {
        records,
        training,
        ensemble,
        reward,
        buffer,
        final_eval,
    })
}

/// Runs full episodes with exploitation-only planning (β = 0) and reports
/// true episodic returns. Episode `i` resets from `rng.child(i)` and plans
/// step `t` with `rng.child(i).child(t + 1)`.
pub fn evaluate_policy<M, R>(
    model: &M,
    reward: &R,
    env: &mut Environment,
    episodes: usize,
    plan: &PlanConfig,
    rng: &RngStream,
) -> Result<EvalSummary>
where
    M: DynamicsModel + ?Sized,
    R: RewardModel + ?Sized,
{
    let schedule = ExplorationSchedule::off();
    let bounds = env.action_bounds().clone();
    let mut returns = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let ep_rng = rng.child(i as u64);
        let mut state = env.reset(&mut ep_rng.clone());
        let mut total = 0.0;
        for t in 0..env.horizon() {
            let out = plan_action(
                model,
                reward,
                &state,
                0,
                plan,
                &schedule,
                &bounds,
                &ep_rng.child(t as u64 + 1),
            )?;
            let step = env.step(&out.action)?;
            total += step.reward;
            state = step.next_state;
            if step.done {
                break;
            }
        }
        returns.push(total);
    }
    Ok(EvalSummary::from_returns(returns))
}
