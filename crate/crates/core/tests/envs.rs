use std::collections::BTreeMap;

use mope2_core::envs::{
    make_dynamics, CartPole, DeceptivePointMass, Dynamics, EnvConfig, Environment, Pendulum, ENV_NAMES,
};
use mope2_core::math::RngStream;

fn conservative_pendulum() -> Pendulum {
    let mut p = BTreeMap::new();
    p.insert("damping".to_string(), 0.0);
    p.insert("max_speed".to_string(), 1e6);
    Pendulum::from_params(&p).unwrap()
}

#[test]
fn pendulum_energy_has_no_secular_drift() {
    // Semi-implicit Euler conserves a modified energy, so the true energy
    // oscillates by O(dt²) but does not drift.
    let p = conservative_pendulum();
    for start in [0.3, 1.5, 2.8] {
        let mut s = vec![start, 0.0];
        let e0 = p.energy(&s);
        let steps = 20_000;
        let mut window = Vec::new();
        for i in 0..steps {
            s = p.transition(&s, &[0.0]).0;
            if i >= steps - 2_000 {
                window.push(p.energy(&s));
            }
        }
        // Average over the last stretch to remove the bounded oscillation.
        let late = window.iter().sum::<f64>() / window.len() as f64;
        let drift_per_step = (late - e0).abs() / (steps as f64 * e0.abs().max(1.0));
        assert!(drift_per_step <= 1e-6, "start {start}: {drift_per_step:e}");
    }
}

#[test]
fn pendulum_upright_is_a_fixed_point() {
    let p = Pendulum::default();
    let (next, r) = p.transition(&[0.0, 0.0], &[0.0]);
    assert!(next[0].abs() < 1e-9 && next[1].abs() < 1e-9);
    assert_eq!(r, 0.0);
}

#[test]
fn resets_are_reproducible_and_documented() {
    let mut env = Environment::from_config(&EnvConfig::named(Pendulum::NAME)).unwrap();
    let a = env.reset(&mut RngStream::new(3, 3));
    let b = env.reset(&mut RngStream::new(3, 3));
    assert_eq!(a, b);
    assert!((a[0] - std::f64::consts::PI).abs() <= Pendulum::default().init_spread);
    assert_eq!(env.steps(), 0);

    let mut pm = Environment::from_config(&EnvConfig::named(DeceptivePointMass::NAME)).unwrap();
    assert_eq!(pm.reset(&mut RngStream::new(0, 0)), vec![0.0; 4]);

    let mut cp = Environment::from_config(&EnvConfig::named(CartPole::NAME)).unwrap();
    assert_eq!(cp.reset(&mut RngStream::new(0, 0)).len(), 4);
}

#[test]
fn rewards_stay_within_r_max() {
    for name in ENV_NAMES {
        let d = make_dynamics(name, &BTreeMap::new()).unwrap();
        let bounds = d.action_bounds();
        let mut rng = RngStream::new(1, 1);
        let mut env = Environment::new(make_dynamics(name, &BTreeMap::new()).unwrap(), 200, 0.0).unwrap();
        for ep in 0..20 {
            env.reset(&mut rng.child(ep));
            loop {
                let a = bounds.sample_uniform(&mut rng);
                let out = env.step(&a).unwrap();
                assert!(
                    out.reward.is_finite() && out.reward.abs() <= d.r_max(),
                    "{name}: {}",
                    out.reward
                );
                if out.done {
                    break;
                }
            }
        }
    }
}

#[test]
fn step_counts_clips_and_rejects() {
    let mut env = Environment::from_config(&EnvConfig {
        horizon: 3,
        ..EnvConfig::named(DeceptivePointMass::NAME)
    })
    .unwrap();
    env.reset(&mut RngStream::new(0, 0));
    let out = env.step(&[5.0, 0.0]).unwrap();
    assert!(out.clipped);
    assert!((out.next_state[2] - 0.2).abs() < 1e-15);
    assert!(env.step(&[f64::NAN, 0.0]).is_err());
    assert!(!env.step(&[0.0, 0.0]).unwrap().done);
    assert!(env.step(&[0.0, 0.0]).unwrap().done);
}

#[test]
fn transitions_are_deterministic() {
    for name in ENV_NAMES {
        let d = make_dynamics(name, &BTreeMap::new()).unwrap();
        let mut rng = RngStream::new(2, 2);
        let s = d.initial_state(&mut rng);
        let a = d.action_bounds().sample_uniform(&mut rng);
        assert_eq!(d.transition(&s, &a), d.transition(&s, &a));
    }
}

#[test]
fn unknown_names_and_keys_are_rejected() {
    assert!(make_dynamics("half-cheetah", &BTreeMap::new()).is_err());
    let mut p = BTreeMap::new();
    p.insert("gravty".to_string(), 9.0);
    assert!(make_dynamics(Pendulum::NAME, &p).is_err());
}
