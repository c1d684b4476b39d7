//! Subcommand implementations. Each returns a value describing what it
//! wrote so that tests can check it without re-reading everything.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use mope2_core::agent::{evaluate_policy, run_with_observer, streams, EvalSummary, RunConfig};
use mope2_core::dynamics::Checkpoint;
use mope2_core::envs::Environment;
use mope2_core::math::{bounding_box_area, pca_top2, RngStream};
use mope2_core::planner::ScheduleMode;
use mope2_core::theory::{stress_suite, tightness_sweep, GeneratorConfig, SweepConfig};
use rayon::prelude::*;

use crate::config::{self, Preset};
use crate::output::{self, fmt_f64, Manifest, RunWriter};
use crate::{BoundViolation, UsageError};

#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Preset the config file is laid over.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Override a config value, e.g. `--set plan.horizon=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Comma-separated seeds; defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Experiment name; defaults to the config file stem or preset name.
    #[arg(long)]
    pub name: Option<String>,
    /// Output root; defaults to $MOPE2_OUTPUT_ROOT, then `runs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        if self.config.is_none() && self.preset.is_none() {
            anyhow::bail!(UsageError("either --config or --preset is required".into()));
        }
        if self.jobs == 0 {
            anyhow::bail!(UsageError("--jobs must be >= 1".into()));
        }
        let cfg = config::load(self.config.as_deref(), self.preset, &self.overrides)?;
        Environment::from_config(&cfg.env).map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    fn name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        if let Some(stem) = self.config.as_deref().and_then(Path::file_stem) {
            return stem.to_string_lossy().into_owned();
        }
        match self.preset {
            Some(Preset::Paper) => "paper".into(),
            _ => "desk".into(),
        }
    }

    fn seeds(&self, cfg: &RunConfig) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![cfg.seed]
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub dir: PathBuf,
    pub seed: u64,
    pub final_eval: Option<EvalSummary>,
}

/// Runs one configured seed into a fresh directory.
pub fn execute_run(cfg: &RunConfig, dir: &Path, run_id: String) -> anyhow::Result<RunResult> {
    output::fresh_dir(dir)?;
    let action_dim = Environment::from_config(&cfg.env)?.action_dim();
    let manifest = Manifest::new(run_id, cfg.clone());
    let mut writer = RunWriter::create(dir, &manifest, action_dim)?;
    let outcome = run_with_observer(cfg, &mut writer).with_context(|| format!("run {}", dir.display()))?;
    writer.finish()?;
    if let Some(eval) = &outcome.final_eval {
        output::write_eval(&dir.join(output::EVAL_CSV), eval)?;
    }
    Checkpoint::new(outcome.ensemble, outcome.reward).save(&dir.join(output::CHECKPOINT_FILE))?;
    Ok(RunResult {
        dir: dir.to_path_buf(),
        seed: cfg.seed,
        final_eval: outcome.final_eval,
    })
}

fn fan_out(jobs: usize, runs: Vec<(RunConfig, PathBuf, String)>) -> anyhow::Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| {
        runs.into_par_iter()
            .map(|(cfg, dir, id)| execute_run(&cfg, &dir, id))
            .collect()
    })
}

/// One run directory per seed under `<root>/<name>/seed-<seed>`.
pub fn train(args: &ConfigArgs) -> anyhow::Result<Vec<RunResult>> {
    let base = args.resolve()?;
    let name = args.name();
    let root = output::output_root(args.out.as_deref()).join(&name);
    let runs = args
        .seeds(&base)
        .into_iter()
        .map(|seed| {
            let cfg = RunConfig { seed, ..base.clone() };
            (cfg, root.join(format!("seed-{seed}")), format!("{name}-seed{seed}"))
        })
        .collect();
    fan_out(args.jobs, runs)
}

#[derive(Args, Clone, Debug)]
pub struct EvalArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    /// Episodes; defaults to the run's configured count (at least 1).
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Seed of the evaluation stream; defaults to the run's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write per-episode returns to this CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reloads a run's checkpoint and evaluates it with exploitation-only
/// planning. With default arguments this reproduces the run's `eval.csv`.
pub fn eval(args: &EvalArgs) -> anyhow::Result<EvalSummary> {
    let cfg = output::load_run_config(&args.run)?;
    let ckpt = Checkpoint::load(&args.run.join(output::CHECKPOINT_FILE))?;
    let episodes = args.episodes.unwrap_or(cfg.eval_episodes.max(1));
    if episodes == 0 {
        anyhow::bail!(UsageError("--episodes must be >= 1".into()));
    }
    let mut env = Environment::from_config(&cfg.env)?;
    let rng = RngStream::new(args.seed.unwrap_or(cfg.seed), streams::EVAL);
    let summary = evaluate_policy(&ckpt.ensemble, &ckpt.reward, &mut env, episodes, &cfg.plan, &rng)?;
    if let Some(path) = &args.out {
        output::write_eval(path, &summary)?;
    }
    Ok(summary)
}

#[derive(Args, Clone, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Add progressive runs with beta_max in {0.25, 0.5, 1, 2}.
    #[arg(long)]
    pub beta_sweep: bool,
}

pub const BETA_SWEEP: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub variant: String,
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub std: f64,
}

impl VariantSummary {
    pub fn from_returns(variant: String, returns: Vec<f64>) -> Self {
        let n = returns.len() as f64;
        let mean = returns.iter().sum::<f64>() / n;
        let std = if returns.len() > 1 {
            (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            variant,
            returns,
            mean,
            std,
        }
    }
}

pub struct AblationReport {
    pub dir: PathBuf,
    pub runs: Vec<(String, RunResult)>,
    pub summary: Vec<VariantSummary>,
}

/// The schedule variants compared by `ablate`, keyed by directory name.
pub fn ablation_variants(base: &RunConfig, beta_sweep: bool) -> Vec<(String, RunConfig)> {
    let with = |mode: ScheduleMode| {
        let mut c = base.clone();
        c.schedule.mode = mode;
        if mode == ScheduleMode::Fixed {
            c.schedule.fixed_beta = c.schedule.beta_max;
        }
        c
    };
    let mut out = vec![
        ("progressive".to_string(), with(ScheduleMode::Progressive)),
        ("fixed".to_string(), with(ScheduleMode::Fixed)),
        ("off".to_string(), with(ScheduleMode::Off)),
    ];
    if beta_sweep {
        for b in BETA_SWEEP {
            let mut c = with(ScheduleMode::Progressive);
            c.schedule.beta_max = b;
            out.push((format!("progressive-beta_max-{b}"), c));
        }
    }
    out
}

/// Mean of a run's final evaluation returns, read back from its `eval.csv`.
pub fn final_return(run_dir: &Path) -> anyhow::Result<f64> {
    let returns = output::read_eval(&run_dir.join(output::EVAL_CSV))?;
    if returns.is_empty() {
        anyhow::bail!("{} holds no evaluation episodes", run_dir.display());
    }
    Ok(returns.iter().sum::<f64>() / returns.len() as f64)
}

pub fn ablate(args: &AblateArgs) -> anyhow::Result<AblationReport> {
    let base = args.config.resolve()?;
    if base.eval_episodes == 0 {
        anyhow::bail!(UsageError(
            "ablate compares final evaluations; eval_episodes must be >= 1".into()
        ));
    }
    let name = args.config.name();
    let root = output::output_root(args.config.out.as_deref()).join(&name);
    let seeds = args.config.seeds(&base);
    let variants = ablation_variants(&base, args.beta_sweep);
    let mut jobs = Vec::new();
    let mut labels = Vec::new();
    for (variant, cfg) in &variants {
        for &seed in &seeds {
            let cfg = RunConfig { seed, ..cfg.clone() };
            let dir = root.join(variant).join(format!("seed-{seed}"));
            jobs.push((cfg, dir, format!("{name}-{variant}-seed{seed}")));
            labels.push(variant.clone());
        }
    }
    let results = fan_out(args.config.jobs, jobs)?;
    let runs: Vec<(String, RunResult)> = labels.into_iter().zip(results).collect();

    let mut summary = Vec::new();
    for (variant, _) in &variants {
        let returns = runs
            .iter()
            .filter(|(v, _)| v == variant)
            .map(|(_, r)| final_return(&r.dir))
            .collect::<anyhow::Result<Vec<_>>>()?;
        summary.push(VariantSummary::from_returns(variant.clone(), returns));
    }

    let mut w = csv::Writer::from_path(root.join("runs.csv"))?;
    w.write_record(["variant", "seed", "final_return", "dir"])?;
    for (v, r) in &runs {
        w.write_record([
            v.clone(),
            r.seed.to_string(),
            fmt_f64(final_return(&r.dir)?),
            r.dir.display().to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(root.join("summary.csv"))?;
    w.write_record(["variant", "runs", "mean", "std"])?;
    for s in &summary {
        w.write_record([
            s.variant.clone(),
            s.returns.len().to_string(),
            fmt_f64(s.mean),
            fmt_f64(s.std),
        ])?;
    }
    w.flush()?;
    Ok(AblationReport {
        dir: root,
        runs,
        summary,
    })
}

pub fn format_summary(rows: &[VariantSummary]) -> String {
    let width = rows.iter().map(|r| r.variant.len()).max().unwrap_or(7).max(7);
    let mut s = format!("{:<width$}  {:>4}  {:>12}  {:>12}\n", "variant", "runs", "mean", "std");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>4}  {:>12.4}  {:>12.4}",
            r.variant,
            r.returns.len(),
            r.mean,
            r.std
        );
    }
    s
}

#[derive(Args, Clone, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use this single discount instead of {0.9, 0.99}; must lie in [0, 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub max_states: usize,
    #[arg(long, default_value_t = 4)]
    pub max_actions: usize,
    #[arg(long, default_value_t = 10)]
    pub max_horizon: usize,
    /// Comma-separated perturbation scales in [0, 1].
    #[arg(long, value_delimiter = ',')]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub reward_noise: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dirichlet_alpha: f64,
    /// CSV of per-instance reports; defaults to `<output root>/verify-bound.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a tightness sweep table to this CSV.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Instances per (gamma, horizon, scale) cell of the sweep.
    #[arg(long, default_value_t = 50)]
    pub sweep_instances: usize,
}

impl VerifyArgs {
    pub fn generator(&self) -> anyhow::Result<GeneratorConfig> {
        let mut g = GeneratorConfig {
            seed: self.seed,
            max_states: self.max_states,
            max_actions: self.max_actions,
            max_horizon: self.max_horizon,
            reward_noise: self.reward_noise,
            dirichlet_alpha: self.dirichlet_alpha,
            ..GeneratorConfig::default()
        };
        if let Some(gamma) = self.gamma {
            if !(0.0..1.0).contains(&gamma) {
                anyhow::bail!(UsageError(format!(
                    "--gamma {gamma} rejected: the bound is only defined for 0 <= gamma < 1"
                )));
            }
            g.gammas = vec![gamma];
        }
        if !self.scales.is_empty() {
            g.scales = self.scales.clone();
        }
        g.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub instances: usize,
    pub failures: usize,
    pub max_ratio: Option<f64>,
    pub csv: PathBuf,
}

impl VerifyReport {
    pub fn summary_line(&self) -> String {
        let ratio = self.max_ratio.map_or("n/a".to_string(), |r| format!("{r:.6}"));
        format!(
            "instances={} failures={} max_ratio={ratio}",
            self.instances, self.failures
        )
    }
}

/// Writes the per-instance CSV and returns the summary. A violation is
/// reported by the caller (after the files are written).
pub fn verify_bound(args: &VerifyArgs) -> anyhow::Result<VerifyReport> {
    let gen = args.generator()?;
    if args.instances == 0 {
        anyhow::bail!(UsageError("--instances must be >= 1".into()));
    }
    let summary = stress_suite(&gen, args.instances)?;
    let csv_path = match &args.out {
        Some(p) => p.clone(),
        None => output::output_root(None).join("verify-bound.csv"),
    };
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record([
        "index",
        "num_states",
        "num_actions",
        "gamma",
        "horizon",
        "scale",
        "policy",
        "tree_error",
        "bound_value",
        "epsilon_r_max",
        "epsilon_m",
        "r_max",
        "reward_gap_term",
        "model_error_term",
        "holds",
    ])?;
    for r in &summary.records {
        let b = &r.report;
        w.write_record([
            r.index.to_string(),
            r.num_states.to_string(),
            r.num_actions.to_string(),
            fmt_f64(r.gamma),
            r.horizon.to_string(),
            fmt_f64(r.scale),
            r.policy.as_str().to_string(),
            fmt_f64(b.tree_error),
            fmt_f64(b.bound_value),
            fmt_f64(b.epsilon_r_max),
            fmt_f64(b.epsilon_m),
            fmt_f64(b.r_max),
            fmt_f64(b.reward_gap_term),
            fmt_f64(b.model_error_term),
            b.holds.to_string(),
        ])?;
    }
    w.flush()?;

    if let Some(path) = &args.sweep {
        let rows = tightness_sweep(&SweepConfig {
            generator: gen.clone(),
            instances_per_cell: args.sweep_instances,
            ..SweepConfig::default()
        })?;
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record([
            "gamma",
            "horizon",
            "scale",
            "instances",
            "zero_cases",
            "mean_tree_error",
            "mean_abs_tree_error",
            "mean_ratio",
            "max_ratio",
            "violations",
        ])?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in rows {
            w.write_record([
                fmt_f64(r.gamma),
                r.horizon.to_string(),
                fmt_f64(r.scale),
                r.instances.to_string(),
                r.zero_cases.to_string(),
                fmt_f64(r.mean_tree_error),
                fmt_f64(r.mean_abs_tree_error),
                opt(r.mean_ratio),
                opt(r.max_ratio),
                r.violations.to_string(),
            ])?;
        }
        w.flush()?;
    }

    Ok(VerifyReport {
        instances: summary.instances,
        failures: summary.failures,
        max_ratio: summary.max_ratio,
        csv: csv_path,
    })
}

pub fn check_violations(report: &VerifyReport) -> anyhow::Result<()> {
    if report.failures > 0 {
        return Err(BoundViolation {
            failures: report.failures,
            instances: report.instances,
        }
        .into());
    }
    Ok(())
}

#[derive(Args, Clone, Debug)]
pub struct AnalyzeArgs {
    /// Run directories to compare.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Comma-separated epochs; defaults to the last epoch logged by every run.
    #[arg(long, value_delimiter = ',')]
    pub epochs: Vec<usize>,
    /// Output directory; defaults to `<output root>/analysis`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionSummary {
    pub epoch: usize,
    pub run: String,
    pub points: usize,
    pub bbox_area: f64,
    pub explained_variance_ratio: [f64; 2],
}

/// Fits a 2D PCA per epoch on the union of the runs' executed actions and
/// writes each run's projection plus bounding-box areas.
pub fn analyze_actions(args: &AnalyzeArgs) -> anyhow::Result<Vec<ProjectionSummary>> {
    let logs = args
        .runs
        .iter()
        .map(|r| output::read_actions(r).map(|a| (r.display().to_string(), a)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let epochs = if args.epochs.is_empty() {
        let last = logs
            .iter()
            .map(|(_, a)| a.keys().next_back().copied())
            .min()
            .flatten()
            .ok_or_else(|| UsageError("no actions logged".into()))?;
        vec![last]
    } else {
        args.epochs.clone()
    };
    for &e in &epochs {
        for (name, actions) in &logs {
            if !actions.contains_key(&e) {
                let available: Vec<String> = actions.keys().map(|k| k.to_string()).collect();
                anyhow::bail!(UsageError(format!(
                    "epoch {e} is not logged in {name}; available epochs: {}",
                    available.join(", ")
                )));
            }
        }
    }

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| output::output_root(None).join("analysis"));
    std::fs::create_dir_all(&out)?;
    let mut summaries = Vec::new();
    for &e in &epochs {
        let union: Vec<Vec<f64>> = logs.iter().flat_map(|(_, a)| a[&e].iter().cloned()).collect();
        let pca = pca_top2(&union).with_context(|| format!("epoch {e}"))?;
        let ratio = pca.explained_variance_ratio();
        let mut w = csv::Writer::from_path(out.join(format!("pca-epoch{e}.csv")))?;
        w.write_record(["run", "index", "pc1", "pc2"])?;
        let mut offset = 0;
        for (name, actions) in &logs {
            let n = actions[&e].len();
            let proj = &pca.projected[offset..offset + n];
            offset += n;
            for (i, p) in proj.iter().enumerate() {
                w.write_record([name.clone(), i.to_string(), fmt_f64(p[0]), fmt_f64(p[1])])?;
            }
            summaries.push(ProjectionSummary {
                epoch: e,
                run: name.clone(),
                points: n,
                bbox_area: bounding_box_area(proj),
                explained_variance_ratio: ratio,
            });
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_path(out.join("pca-summary.csv"))?;
    w.write_record([
        "epoch",
        "run",
        "points",
        "bbox_area",
        "explained_variance_1",
        "explained_variance_2",
    ])?;
    for s in &summaries {
        w.write_record([
            s.epoch.to_string(),
            s.run.clone(),
            s.points.to_string(),
            fmt_f64(s.bbox_area),
            fmt_f64(s.explained_variance_ratio[0]),
            fmt_f64(s.explained_variance_ratio[1]),
        ])?;
    }
    w.flush()?;
    Ok(summaries)
}
