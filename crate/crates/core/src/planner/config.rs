use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which elite actions the per-timestep refit uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliteFit {
    /// Refit every timestep from the full elite sequences.
    FullSequence,
    /// Refit only timestep 0 from the elites' first actions; later
    /// timesteps keep their current distribution.
    FirstAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    /// Candidate action sequences per iteration.
    pub candidates: usize,
    pub horizon: usize,
    pub elite_count: usize,
    /// Smoothing rate for `μ ← (1−α)μ + αμ'` (and likewise for Σ).
    pub alpha: f64,
    pub max_iterations: usize,
    /// Stop once the best return seen improves by less than this.
    /// Zero disables early stopping.
    pub convergence_tol: f64,
    pub gamma: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub variance_floor: f64,
    pub elite_fit: EliteFit,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            candidates: 500,
            horizon: 30,
            elite_count: 100,
            alpha: 0.01,
            max_iterations: 20,
            convergence_tol: 1e-3,
            gamma: 1.0,
            mu0: 0.0,
            sigma0: 0.1,
            variance_floor: 1e-6,
            elite_fit: EliteFit::FullSequence,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.candidates == 0 {
            return bad("plan.candidates must be >= 1");
        }
        if self.elite_count == 0 || self.elite_count > self.candidates {
            return bad("plan.elite_count must be in 1..=plan.candidates");
        }
        if self.horizon == 0 {
            return bad("plan.horizon must be >= 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("plan.alpha must lie in (0, 1]");
        }
        if self.max_iterations == 0 {
            return bad("plan.max_iterations must be >= 1");
        }
        if !(self.convergence_tol >= 0.0) {
            return bad("plan.convergence_tol must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("plan.gamma must lie in [0, 1]");
        }
        if !(self.sigma0 > 0.0) || !(self.variance_floor > 0.0) {
            return bad("plan.sigma0 and plan.variance_floor must be > 0");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Linear ramp in the interaction epoch.
    Progressive,
    /// Constant `fixed_beta`.
    Fixed,
    /// No exploration bonus.
    Off,
}

/// Exploration temperature schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationSchedule {
    pub mode: ScheduleMode,
    pub beta_min: f64,
    pub beta_max: f64,
    pub e_min: usize,
    pub e_max: usize,
    pub fixed_beta: f64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Progressive,
            beta_min: 0.0,
            beta_max: 1.0,
            e_min: 50,
            e_max: 300,
            fixed_beta: 1.0,
        }
    }
}

impl ExplorationSchedule {
    pub fn off() -> Self {
        Self {
            mode: ScheduleMode::Off,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_min >= self.e_max {
            return Err(Error::InvalidConfig("schedule.e_min must be < schedule.e_max".into()));
        }
        if !(self.beta_min <= self.beta_max) {
            return Err(Error::InvalidConfig(
                "schedule.beta_min must be <= schedule.beta_max".into(),
            ));
        }
        if !self.fixed_beta.is_finite() {
            return Err(Error::InvalidConfig("schedule.fixed_beta must be finite".into()));
        }
        Ok(())
    }
}

/// Temperature for interaction epoch `epoch`:
/// `min(max(β_min + (e − e_min)/(e_max − e_min), β_min), β_max)` in
/// progressive mode.
pub fn temperature(schedule: &ExplorationSchedule, epoch: usize) -> f64 {
    match schedule.mode {
        ScheduleMode::Off => 0.0,
        ScheduleMode::Fixed => schedule.fixed_beta,
        ScheduleMode::Progressive => {
            let ramp = (epoch as f64 - schedule.e_min as f64) / (schedule.e_max as f64 - schedule.e_min as f64);
            (schedule.beta_min + ramp).max(schedule.beta_min).min(schedule.beta_max)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_values() {
        let s = ExplorationSchedule::default();
        assert_eq!(temperature(&s, 0), 0.0);
        assert_eq!(temperature(&s, 50), 0.0);
        assert_eq!(temperature(&s, 175), 0.5);
        assert_eq!(temperature(&s, 300), 1.0);
        assert_eq!(temperature(&s, 1000), 1.0);
    }

    #[test]
    fn fixed_and_off_modes() {
        let mut s = ExplorationSchedule {
            mode: ScheduleMode::Fixed,
            fixed_beta: 0.3,
            ..Default::default()
        };
        assert_eq!(temperature(&s, 0), 0.3);
        assert_eq!(temperature(&s, 999), 0.3);
        s.mode = ScheduleMode::Off;
        assert_eq!(temperature(&s, 999), 0.0);
    }

    #[test]
    fn validation() {
        let s = ExplorationSchedule {
            e_min: 10,
            e_max: 10,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let p = PlanConfig {
            elite_count: 600,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        assert!(PlanConfig {
            alpha: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PlanConfig::default().validate().is_ok());
    }
}
