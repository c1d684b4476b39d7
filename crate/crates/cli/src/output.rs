//! Run directories: resolved config, manifest, streamed metrics, executed
//! actions, evaluation returns and the final checkpoint.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use mope2_core::agent::{EpochRecord, EvalSummary, RunConfig, RunObserver};
use serde::{Deserialize, Serialize};

use crate::{config, UsageError};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "MOPE2_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

/// Bumped whenever a metrics column is added, removed or reordered.
pub const METRICS_SCHEMA_VERSION: u32 = 1;
pub const METRICS_HEADER: [&str; 5] = ["epoch", "true_return", "beta", "model_loss_mean", "planner_best_return"];

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSONL: &str = "metrics.jsonl";
pub const ACTIONS_CSV: &str = "actions.csv";
pub const EVAL_CSV: &str = "eval.csv";
pub const CHECKPOINT_FILE: &str = "model.json";

pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub config: String,
    pub metrics_csv: String,
    pub metrics_jsonl: String,
    pub actions: String,
    pub eval: String,
    pub checkpoint: String,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            config: CONFIG_FILE.into(),
            metrics_csv: METRICS_CSV.into(),
            metrics_jsonl: METRICS_JSONL.into(),
            actions: ACTIONS_CSV.into(),
            eval: EVAL_CSV.into(),
            checkpoint: CHECKPOINT_FILE.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run_id: String,
    pub code_version: String,
    pub metrics_schema_version: u32,
    pub seeds: Vec<u64>,
    pub config: RunConfig,
    pub layout: Layout,
}

impl Manifest {
    pub fn new(run_id: String, config: RunConfig) -> Self {
        Self {
            run_id,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            metrics_schema_version: METRICS_SCHEMA_VERSION,
            seeds: vec![config.seed],
            config,
            layout: Layout::default(),
        }
    }

    pub fn load(run_dir: &Path) -> anyhow::Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    }
}

/// Reads the resolved config snapshot of a run directory.
pub fn load_run_config(run_dir: &Path) -> anyhow::Result<RunConfig> {
    let path = run_dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(config::parse_toml(&text).with_context(|| format!("parsing {}", path.display()))?)
}

/// Creates `dir`, refusing to reuse one that already holds files.
pub fn fresh_dir(dir: &Path) -> anyhow::Result<()> {
    if dir.exists() && fs::read_dir(dir)?.next().is_some() {
        anyhow::bail!(UsageError(format!(
            "output directory {} is not empty; choose another name or remove it",
            dir.display()
        )));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn metrics_row(r: &EpochRecord) -> [String; 5] {
    [
        r.epoch.to_string(),
        fmt_f64(r.true_return),
        fmt_f64(r.beta),
        fmt_opt(r.model_loss_mean),
        fmt_opt(r.planner_best_return),
    ]
}

/// Streams a run's per-epoch metrics and executed actions to disk.
pub struct RunWriter {
    metrics_csv: csv::Writer<BufWriter<File>>,
    metrics_jsonl: BufWriter<File>,
    actions: csv::Writer<BufWriter<File>>,
    action_dim: usize,
}

fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

impl RunWriter {
    /// Writes the config snapshot and manifest and opens the metric streams.
    pub fn create(dir: &Path, manifest: &Manifest, action_dim: usize) -> anyhow::Result<Self> {
        fs::write(dir.join(CONFIG_FILE), config::to_toml(&manifest.config)?)?;
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(manifest)?)?;
        let mut metrics_csv = csv::Writer::from_writer(create(&dir.join(METRICS_CSV))?);
        metrics_csv.write_record(METRICS_HEADER)?;
        let mut actions = csv::Writer::from_writer(create(&dir.join(ACTIONS_CSV))?);
        let mut header = vec!["epoch".to_string(), "step".to_string()];
        header.extend((0..action_dim).map(|i| format!("a{i}")));
        actions.write_record(&header)?;
        Ok(Self {
            metrics_csv,
            metrics_jsonl: create(&dir.join(METRICS_JSONL))?,
            actions,
            action_dim,
        })
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.metrics_csv.flush()?;
        self.actions.flush()?;
        self.metrics_jsonl.flush()?;
        Ok(())
    }
}

impl RunObserver for RunWriter {
    fn on_action(&mut self, epoch: usize, step: usize, action: &[f64]) -> mope2_core::Result<()> {
        debug_assert_eq!(action.len(), self.action_dim);
        let mut row = Vec::with_capacity(action.len() + 2);
        row.push(epoch.to_string());
        row.push(step.to_string());
        row.extend(action.iter().map(|&a| fmt_f64(a)));
        self.actions.write_record(&row).map_err(std::io::Error::from)?;
        Ok(())
    }

    fn on_epoch(&mut self, record: &EpochRecord) -> mope2_core::Result<()> {
        self.metrics_csv
            .write_record(metrics_row(record))
            .map_err(std::io::Error::from)?;
        self.metrics_csv.flush()?;
        let line = serde_json::to_string(record).map_err(std::io::Error::from)?;
        writeln!(self.metrics_jsonl, "{line}")?;
        self.metrics_jsonl.flush()?;
        Ok(())
    }
}

pub fn write_eval(path: &Path, eval: &EvalSummary) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "return"])?;
    for (i, r) in eval.returns.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(*r)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_eval(path: &Path) -> anyhow::Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        out.push(row.get(1).context("eval row without a return column")?.parse()?);
    }
    Ok(out)
}

/// Executed actions of one run, grouped by epoch in file order.
pub fn read_actions(run_dir: &Path) -> anyhow::Result<std::collections::BTreeMap<usize, Vec<Vec<f64>>>> {
    let path = run_dir.join(ACTIONS_CSV);
    let mut r = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut by_epoch: std::collections::BTreeMap<usize, Vec<Vec<f64>>> = Default::default();
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let bad = || format!("{}: malformed row {}", path.display(), line + 2);
        let epoch: usize = row.get(0).with_context(bad)?.parse().with_context(bad)?;
        let action = row
            .iter()
            .skip(2)
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(bad)?;
        by_epoch.entry(epoch).or_default().push(action);
    }
    Ok(by_epoch)
}
