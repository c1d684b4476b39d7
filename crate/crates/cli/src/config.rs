//! Run configuration files: TOML documents shaped like [`RunConfig`], an
//! optional named preset underneath, and dotted-key overrides on top.

use std::path::Path;

use anyhow::Context;
use mope2_core::agent::RunConfig;
use mope2_core::dynamics::{ModelConfig, TrainConfig};
use mope2_core::envs::EnvConfig;
use mope2_core::planner::{EliteFit, ExplorationSchedule, PlanConfig, ScheduleMode};
use toml::{Table, Value};

use crate::UsageError;

/// Key naming a preset inside a config file.
pub const PRESET_KEY: &str = "preset";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Reduced sizes that run in minutes on one core.
    Desk,
    /// The published hyper-parameter table.
    Paper,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self, UsageError> {
        match name {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(UsageError(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }

    pub fn config(self) -> RunConfig {
        match self {
            Preset::Desk => desk(),
            Preset::Paper => paper(),
        }
    }
}

fn desk() -> RunConfig {
    let mut env = EnvConfig::named("deceptive-point-mass");
    env.horizon = 50;
    RunConfig {
        seed: 0,
        steps_per_epoch: 200,
        total_epochs: 10,
        warmup_epochs: 1,
        eval_episodes: 3,
        workers: 1,
        env,
        model: ModelConfig {
            ensemble_size: 4,
            hidden: vec![64, 64],
            ..ModelConfig::default()
        },
        train: TrainConfig::default(),
        plan: PlanConfig {
            candidates: 100,
            horizon: 15,
            elite_count: 20,
            alpha: 0.5,
            max_iterations: 5,
            sigma0: 0.5,
            ..PlanConfig::default()
        },
        schedule: ExplorationSchedule {
            mode: ScheduleMode::Progressive,
            e_min: 1,
            e_max: 6,
            ..ExplorationSchedule::default()
        },
    }
}

fn paper() -> RunConfig {
    RunConfig {
        seed: 0,
        steps_per_epoch: 1000,
        total_epochs: 400,
        warmup_epochs: 1,
        eval_episodes: 5,
        workers: 1,
        env: EnvConfig::named("pendulum"),
        model: ModelConfig {
            ensemble_size: 4,
            hidden: vec![500, 500, 500],
            ..ModelConfig::default()
        },
        train: TrainConfig::default(),
        plan: PlanConfig {
            elite_fit: EliteFit::FullSequence,
            ..PlanConfig::default()
        },
        schedule: ExplorationSchedule::default(),
    }
}

/// Reads a config file, lays it over `preset` (or the file's own `preset`
/// key) and applies `key.path=value` overrides in order.
pub fn load(path: Option<&Path>, preset: Option<Preset>, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let mut file = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            text.parse::<Table>()
                .map_err(|e| UsageError(format!("{}: {}", p.display(), e.message())))?
        }
        None => Table::new(),
    };
    let named = match file.remove(PRESET_KEY) {
        Some(Value::String(s)) => Some(Preset::parse(&s)?),
        Some(_) => return Err(UsageError(format!("`{PRESET_KEY}` must be a string")).into()),
        None => None,
    };
    let base = preset.or(named);
    let mut doc = match base {
        Some(p) => to_table(&p.config())?,
        None => Table::new(),
    };
    merge(&mut doc, file);
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(from_table(doc)?)
}

pub fn to_table(cfg: &RunConfig) -> anyhow::Result<Table> {
    Ok(Table::try_from(cfg).context("serialising config")?)
}

/// Deserialises a full config; errors name the offending key path.
pub fn from_table(doc: Table) -> Result<RunConfig, UsageError> {
    let cfg: RunConfig = serde_path_to_error::deserialize(Value::Table(doc)).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            UsageError(format!("config: {}", e.inner()))
        } else {
            UsageError(format!("config key `{path}`: {}", e.inner()))
        }
    })?;
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

/// Renders the fully resolved config, every default spelled out.
pub fn to_toml(cfg: &RunConfig) -> anyhow::Result<String> {
    if i64::try_from(cfg.seed).is_err() {
        anyhow::bail!(UsageError(format!("seed {} does not fit in a TOML integer", cfg.seed)));
    }
    Ok(toml::to_string(cfg).context("serialising config")?)
}

pub fn parse_toml(text: &str) -> Result<RunConfig, UsageError> {
    let doc = text.parse::<Table>().map_err(|e| UsageError(e.message().to_string()))?;
    from_table(doc)
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(dst)), Value::Table(src)) => merge(dst, src),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

/// Applies `a.b.c=value`. The value is read as a TOML literal when it
/// parses as one and as a bare string otherwise.
pub fn apply_override(doc: &mut Table, spec: &str) -> Result<(), UsageError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| UsageError(format!("override `{spec}` is not of the form key.path=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(UsageError(format!("override `{spec}` has an empty key segment")));
    }
    let value = parse_value(raw.trim());
    let mut table = doc;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(UsageError(format!(
                    "override `{spec}`: `{}` is not a table",
                    parts[..=i].join(".")
                )))
            }
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}
