use mope2_core::agent::{evaluate_policy, run, run_with_observer, RunConfig, RunObserver};
use mope2_core::dynamics::{ModelConfig, TrainConfig};
use mope2_core::envs::{EnvConfig, Environment, OracleModel};
use mope2_core::math::RngStream;
use mope2_core::planner::{temperature, ExplorationSchedule, PlanConfig};

fn tiny(env: &str) -> RunConfig {
    RunConfig {
        seed: 11,
        steps_per_epoch: 25,
        total_epochs: 4,
        warmup_epochs: 2,
        eval_episodes: 0,
        workers: 1,
        env: EnvConfig {
            horizon: 20,
            ..EnvConfig::named(env)
        },
        model: ModelConfig {
            ensemble_size: 3,
            hidden: vec![8],
            ..ModelConfig::default()
        },
        train: TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        },
        plan: PlanConfig {
            candidates: 16,
            horizon: 4,
            elite_count: 4,
            max_iterations: 2,
            ..PlanConfig::default()
        },
        schedule: ExplorationSchedule {
            e_min: 1,
            e_max: 3,
            ..ExplorationSchedule::default()
        },
    }
}

#[derive(Default)]
struct Log {
    actions: Vec<(usize, usize, Vec<f64>)>,
    epochs: Vec<usize>,
}

impl RunObserver for Log {
    fn on_action(&mut self, epoch: usize, step: usize, action: &[f64]) -> mope2_core::Result<()> {
        assert_eq!(self.epochs.len(), epoch, "actions arrive before their epoch record");
        self.actions.push((epoch, step, action.to_vec()));
        Ok(())
    }

    fn on_epoch(&mut self, record: &mope2_core::agent::EpochRecord) -> mope2_core::Result<()> {
        self.epochs.push(record.epoch);
        Ok(())
    }
}

#[test]
fn records_track_the_buffer_schedule_and_training() {
    let cfg = tiny("pendulum-swing-up");
    let mut log = Log::default();
    let out = run_with_observer(&cfg, &mut log).unwrap();
    assert_eq!(out.records.len(), 4);
    assert_eq!(log.epochs, vec![0, 1, 2, 3]);
    assert_eq!(log.actions.len(), 100);
    assert_eq!(out.buffer.len(), 100);
    // The buffer holds the executed actions in order.
    for ((_, _, a), t) in log.actions.iter().zip(out.buffer.iter()) {
        assert_eq!(a, &t.action);
    }
    for (e, r) in out.records.iter().enumerate() {
        assert_eq!(r.epoch, e);
        assert_eq!(r.buffer_size, 25 * (e + 1));
        assert_eq!(r.trained_after_epoch, e);
        assert_eq!(r.beta, temperature(&cfg.schedule, e));
        let ends = (25 * e + 1..=25 * (e + 1)).filter(|s| s % 20 == 0).count();
        assert_eq!(r.episodes_completed, ends);
        let planning = e >= cfg.warmup_epochs;
        assert_eq!(r.planner_best_return.is_some(), planning);
        assert_eq!(r.planner_iterations_mean.is_some(), planning);
        assert!(r.model_loss_mean.unwrap().is_finite());
    }
    assert_eq!(
        out.records.iter().map(|r| r.beta).collect::<Vec<_>>(),
        [0.0, 0.0, 0.5, 1.0]
    );
    // One training report per epoch, each over the whole buffer so far.
    assert_eq!(out.training.len(), 4);
    for (e, t) in out.training.iter().enumerate() {
        assert_eq!(t.samples, 25 * (e + 1));
    }
    let true_sum: f64 = out.buffer.iter().map(|t| t.reward).sum();
    let rec_sum: f64 = out.records.iter().map(|r| r.true_return).sum();
    assert!((true_sum - rec_sum).abs() < 1e-9);
}

#[test]
fn warmup_actions_do_not_depend_on_the_models() {
    let a = tiny("deceptive-point-mass");
    let mut b = a.clone();
    b.model.hidden = vec![16, 16];
    b.plan.candidates = 40;
    let (mut la, mut lb) = (Log::default(), Log::default());
    run_with_observer(&a, &mut la).unwrap();
    run_with_observer(&b, &mut lb).unwrap();
    let warm = |l: &Log| l.actions.iter().filter(|x| x.0 < 2).cloned().collect::<Vec<_>>();
    let planned = |l: &Log| l.actions.iter().filter(|x| x.0 >= 2).cloned().collect::<Vec<_>>();
    assert_eq!(warm(&la), warm(&lb));
    assert_ne!(planned(&la), planned(&lb));
    // Uniform over the bounds.
    assert!(warm(&la).iter().all(|(_, _, a)| a.iter().all(|x| x.abs() <= 1.0)));
}

#[test]
fn records_are_byte_identical_across_repeats_and_threads() {
    let cfg = tiny("cart-pole-swing-up");
    let a = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run(&cfg).unwrap()).unwrap();
    let c = serde_json::to_string(
        &run(&RunConfig {
            workers: 3,
            ..cfg.clone()
        })
        .unwrap(),
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = serde_json::to_string(&run(&RunConfig { seed: 12, ..cfg }).unwrap()).unwrap();
    assert_ne!(a, d);
}

#[test]
fn invalid_run_configs_are_rejected() {
    let cfg = tiny("pendulum-swing-up");
    for bad in [
        RunConfig {
            warmup_epochs: 0,
            ..cfg.clone()
        },
        RunConfig {
            total_epochs: 2,
            ..cfg.clone()
        },
        RunConfig {
            steps_per_epoch: 0,
            ..cfg.clone()
        },
        RunConfig {
            workers: 0,
            ..cfg.clone()
        },
    ] {
        assert!(matches!(run(&bad), Err(mope2_core::Error::InvalidConfig(_))));
    }
    let unknown = RunConfig {
        env: EnvConfig::named("mountain-car"),
        ..cfg
    };
    assert!(matches!(run(&unknown), Err(mope2_core::Error::UnknownEnvironment(_))));
}

#[test]
fn final_evaluation_uses_its_own_stream() {
    let mut cfg = tiny("pendulum-swing-up");
    cfg.eval_episodes = 2;
    let out = run_with_observer(&cfg, &mut ()).unwrap();
    let eval = out.final_eval.unwrap();
    assert_eq!(eval.returns.len(), 2);
    let mut env = Environment::from_config(&cfg.env).unwrap();
    let again = evaluate_policy(
        &out.ensemble,
        &out.reward,
        &mut env,
        2,
        &cfg.plan,
        &RngStream::new(cfg.seed, mope2_core::agent::streams::EVAL),
    )
    .unwrap();
    assert_eq!(again, eval);
    // Evaluation does not disturb the training records.
    cfg.eval_episodes = 0;
    assert_eq!(run(&cfg).unwrap(), out.records);
}

#[test]
fn planning_on_the_true_pendulum_beats_random_actions() {
    let cfg = EnvConfig {
        horizon: 100,
        ..EnvConfig::named("pendulum-swing-up")
    };
    let mut env = Environment::from_config(&cfg).unwrap();
    let dynamics = mope2_core::envs::make_dynamics(&cfg.name, &cfg.params).unwrap();
    let oracle = OracleModel::new(dynamics.as_ref());
    let plan = PlanConfig {
        candidates: 200,
        horizon: 20,
        elite_count: 20,
        alpha: 0.1,
        max_iterations: 5,
        sigma0: 0.5,
        ..PlanConfig::default()
    };
    let planned = evaluate_policy(&oracle, &oracle, &mut env, 2, &plan, &RngStream::new(0, 9)).unwrap();

    let bounds = env.action_bounds().clone();
    let mut random = Vec::new();
    for ep in 0..5u64 {
        let rng = RngStream::new(1, ep);
        env.reset(&mut rng.clone());
        let mut total = 0.0;
        for t in 0..cfg.horizon {
            let out = env.step(&bounds.sample_uniform(&mut rng.child(t as u64))).unwrap();
            total += out.reward;
            if out.done {
                break;
            }
        }
        random.push(total);
    }
    let best_random = random.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        planned.returns.iter().all(|&r| r > best_random),
        "planned {:?} random {random:?}",
        planned.returns
    );
}
