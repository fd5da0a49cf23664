//! Command-line front end: config files, experiment orchestration and
//! report emission.
//!
//! Exit codes: 0 on success, 1 for configuration or data errors, 2 for
//! failures during a run.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, mean_std, normalize, split, CsvSchema, CvOutcome, CvPlan, Dataset, FoldId,
    SplitFractions,
};
use crate::error::{Error, Result};
use crate::evolution::{run_with_holdout, EvolutionConfig, RunReport};
use crate::network::TopologyStats;
use crate::BUILD_ID;

/// Per-fold seed stride.
pub const FOLD_SEED_STRIDE: u64 = 1_000_003;

const EFFORT_NOTE: &str = "effort counts every evaluation of the training pattern file, \
including evaluations made by the constant-optimization GA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Single,
    Cv5x2,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// CSV path, relative to the config file unless absolute.
    pub path: PathBuf,
    #[serde(default)]
    pub schema: CsvSchema,
}

/// The TOML document read by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default = "default_kind")]
    pub kind: ExperimentKind,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Overrides `evolution.seed` when set.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Share of the data kept aside as the test set of a single run.
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    /// Validation percentages for the sweep experiment.
    #[serde(default = "default_percents")]
    pub sweep_percents: Vec<f64>,
    #[serde(default)]
    pub parallel_folds: bool,
}

fn default_kind() -> ExperimentKind {
    ExperimentKind::Single
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_holdout() -> f64 {
    0.3
}

fn default_percents() -> Vec<f64> {
    vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
}

impl RunConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Reads and validates a config file; relative dataset paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.dataset.path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.dataset.path = dir.join(&cfg.dataset.path);
            }
        }
        Ok(cfg)
    }

    pub fn resolved_evolution(&self) -> EvolutionConfig {
        let mut evo = self.evolution.clone();
        if let Some(seed) = self.seed {
            evo.seed = seed;
        }
        evo
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_evolution().validate()?;
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::config("holdout_fraction", "must lie in [0, 1)"));
        }
        validate_percents(&self.sweep_percents)
    }
}

pub fn validate_percents(percents: &[f64]) -> Result<()> {
    if percents.is_empty() {
        return Err(Error::config("sweep_percents", "must not be empty"));
    }
    match percents.iter().find(|p| !(0.0..=50.0).contains(*p)) {
        Some(p) => Err(Error::config(
            "sweep_percents",
            format!("{p} is outside [0, 50]"),
        )),
        None => Ok(()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "gpann", version, about = "Evolve and simplify neural networks with typed GP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Effort budget override (training-set evaluations).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    parallel_folds: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment named by the config's `kind`.
    Exec(Common),
    /// One evolutionary run on a train/test split.
    Run(Common),
    /// 5x2 cross-validation.
    Cv5x2(Common),
    /// 5x2 cross-validation for several validation percentages.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated percentages, e.g. `0,10,20`.
        #[arg(long, value_delimiter = ',')]
        percents: Option<Vec<f64>>,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfigFile> {
    let mut cfg = RunConfigFile::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(dir) = &common.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(b) = common.budget {
        cfg.evolution.effort_budget = b;
    }
    if common.parallel_folds {
        cfg.parallel_folds = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Exec(common) => {
            let cfg = load_config(&common)?;
            match cfg.kind {
                ExperimentKind::Single => cmd_run(&cfg).map(|_| ()),
                ExperimentKind::Cv5x2 => cmd_cv5x2(&cfg).map(|_| ()),
                ExperimentKind::Sweep => {
                    cmd_sweep_validation(&cfg, &cfg.sweep_percents.clone()).map(|_| ())
                }
            }
        }
        Command::Run(common) => cmd_run(&load_config(&common)?).map(|_| ()),
        Command::Cv5x2(common) => cmd_cv5x2(&load_config(&common)?).map(|_| ()),
        Command::Sweep { common, percents } => {
            let cfg = load_config(&common)?;
            let percents = percents.unwrap_or_else(|| cfg.sweep_percents.clone());
            validate_percents(&percents)?;
            cmd_sweep_validation(&cfg, &percents).map(|_| ())
        }
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    Ok(normalize(&load_csv(&spec.path, &spec.schema)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub name: String,
    pub patterns: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub dropped_rows: usize,
    pub classes: Vec<String>,
}

impl DatasetSummary {
    fn of(ds: &Dataset) -> Self {
        DatasetSummary {
            name: ds.name.clone(),
            patterns: ds.len(),
            inputs: ds.input_width(),
            outputs: ds.target_width(),
            dropped_rows: ds.dropped_rows,
            classes: ds.class_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunDocument<'a> {
    pub build: &'static str,
    pub effort_note: &'static str,
    pub config: &'a RunConfigFile,
    pub resolved: &'a EvolutionConfig,
    pub dataset: DatasetSummary,
    pub report: &'a RunReport,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn trace_csv(report: &RunReport) -> String {
    let mut s = String::from(
        "generation,effort,best_fitness,mean_fitness,best_neurons,best_used_features\n",
    );
    for p in &report.trace {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            p.generation,
            p.effort,
            p.best_fitness,
            p.mean_fitness,
            p.best_neurons,
            p.best_used_features
        );
    }
    s
}

/// Single run on a stratified train/test split; writes `report.json`,
/// `best_network.dot`, `best_network.json` and `trace.csv`.
pub fn cmd_run(cfg: &RunConfigFile) -> Result<RunReport> {
    cfg.validate()?;
    let evo = cfg.resolved_evolution();
    let ds = load_dataset(&cfg.dataset)?;
    let h = cfg.holdout_fraction;
    let (train, _, test) = split(
        &ds,
        SplitFractions::new(1.0 - h, 0.0, h),
        evo.stratified,
        evo.seed,
    )?;
    let train = train.ok_or(Error::DegenerateSplit { part: "train" })?;
    let report = run_with_holdout(&evo, &train, test.as_ref())?;

    create_dir(&cfg.out_dir)?;
    let doc = RunDocument {
        build: BUILD_ID,
        effort_note: EFFORT_NOTE,
        config: cfg,
        resolved: &evo,
        dataset: DatasetSummary::of(&ds),
        report: &report,
    };
    write(
        &cfg.out_dir.join("report.json"),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    write(
        &cfg.out_dir.join("best_network.dot"),
        &report.best_network.to_dot(),
    )?;
    write(
        &cfg.out_dir.join("best_network.json"),
        &report.best_network.to_json(),
    )?;
    write(&cfg.out_dir.join("trace.csv"), &trace_csv(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldSummary {
    pub iteration: usize,
    pub fold: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    pub train_mse: f64,
    pub effort_used: u64,
    pub reachable_neurons: usize,
    pub topology: TopologyStats,
    pub used_features: Vec<usize>,
    pub best_tree: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvSummary {
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_reachable_neurons: f64,
    pub mean_hidden_neurons: f64,
    pub mean_connections: f64,
    pub mean_used_features: f64,
    pub total_effort: u64,
    pub folds: Vec<FoldSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvDocument<'a> {
    pub build: &'static str,
    pub effort_note: &'static str,
    pub config: &'a RunConfigFile,
    pub resolved: &'a EvolutionConfig,
    pub dataset: DatasetSummary,
    #[serde(flatten)]
    pub summary: &'a CvSummary,
}

pub fn fold_seed(base: u64, id: FoldId) -> u64 {
    base.wrapping_add(id.index() as u64 * FOLD_SEED_STRIDE)
}

/// Runs the ten folds of `plan`, optionally in parallel. Each fold gets its
/// own seed and effort counter.
pub fn cross_validate(
    evo: &EvolutionConfig,
    ds: &Dataset,
    plan: &CvPlan,
    parallel: bool,
) -> Result<CvSummary> {
    let run_fold = |id: FoldId| -> Result<(FoldId, RunReport)> {
        let (train, test) = plan.fold_data(ds, id);
        let fold_cfg = EvolutionConfig {
            seed: fold_seed(evo.seed, id),
            ..evo.clone()
        };
        run_with_holdout(&fold_cfg, &train, Some(&test))
            .map(|r| (id, r))
            .map_err(|e| Error::Fold {
                iteration: id.iteration,
                fold: id.fold,
                source: Box::new(e),
            })
    };
    let ids: Vec<FoldId> = plan.folds().collect();
    let folds: Vec<(FoldId, RunReport)> = if parallel {
        ids.into_par_iter().map(run_fold).collect::<Result<_>>()?
    } else {
        ids.into_iter().map(run_fold).collect::<Result<_>>()?
    };
    Ok(summarize(evo.seed, CvOutcome::from_folds(folds)))
}

fn summarize(base_seed: u64, outcome: CvOutcome<RunReport>) -> CvSummary {
    let mean = |f: &dyn Fn(&RunReport) -> f64| {
        mean_std(&outcome.folds.iter().map(|(_, r)| f(r)).collect::<Vec<_>>()).0
    };
    CvSummary {
        mean_reachable_neurons: mean(&|r| r.reachable_neurons as f64),
        mean_hidden_neurons: mean(&|r| r.topology.hidden_neurons as f64),
        mean_connections: mean(&|r| r.topology.connections as f64),
        mean_used_features: mean(&|r| r.used_features.len() as f64),
        total_effort: outcome.folds.iter().map(|(_, r)| r.effort_used).sum(),
        accuracies: outcome.accuracies.clone(),
        mean_accuracy: outcome.mean,
        std_accuracy: outcome.std,
        folds: outcome
            .folds
            .iter()
            .map(|(id, r)| FoldSummary {
                iteration: id.iteration,
                fold: id.fold,
                seed: fold_seed(base_seed, *id),
                test_accuracy: r.test_accuracy.unwrap_or(f64::NAN),
                train_mse: r.train_mse,
                effort_used: r.effort_used,
                reachable_neurons: r.reachable_neurons,
                topology: r.topology,
                used_features: r.used_features.clone(),
                best_tree: r.best_tree.clone(),
            })
            .collect(),
    }
}

fn cv_into(cfg: &RunConfigFile, evo: &EvolutionConfig, out_name: &str) -> Result<CvSummary> {
    let ds = load_dataset(&cfg.dataset)?;
    let plan = CvPlan::new(&ds, evo.seed, evo.stratified)?;
    let summary = cross_validate(evo, &ds, &plan, cfg.parallel_folds)?;
    create_dir(&cfg.out_dir)?;
    write(
        &cfg.out_dir.join("folds.json"),
        &serde_json::to_string_pretty(&plan)?,
    )?;
    let doc = CvDocument {
        build: BUILD_ID,
        effort_note: EFFORT_NOTE,
        config: cfg,
        resolved: evo,
        dataset: DatasetSummary::of(&ds),
        summary: &summary,
    };
    write(
        &cfg.out_dir.join(out_name),
        &serde_json::to_string_pretty(&doc)?,
    )?;
    Ok(summary)
}

/// 5x2 cross-validation; writes `cv_report.json` and `folds.json`.
pub fn cmd_cv5x2(cfg: &RunConfigFile) -> Result<CvSummary> {
    cfg.validate()?;
    cv_into(cfg, &cfg.resolved_evolution(), "cv_report.json")
}

/// One 5x2cv per validation percentage; writes `sweep.csv` with one row per
/// percentage and a `cv_report_<p>.json` for each.
pub fn cmd_sweep_validation(cfg: &RunConfigFile, percents: &[f64]) -> Result<Vec<(f64, CvSummary)>> {
    cfg.validate()?;
    validate_percents(percents)?;
    let mut rows = Vec::with_capacity(percents.len());
    for &p in percents {
        let evo = EvolutionConfig {
            validation_fraction: p / 100.0,
            ..cfg.resolved_evolution()
        };
        let summary = cv_into(cfg, &evo, &format!("cv_report_{p}.json"))?;
        rows.push((p, summary));
    }
    let name = cfg
        .dataset
        .path
        .file_stem()
        .map_or_else(|| "accuracy".to_owned(), |s| s.to_string_lossy().into_owned());
    let mut csv = format!("validation_percent,{name}\n");
    for (p, s) in &rows {
        let _ = writeln!(csv, "{p},{}", s.mean_accuracy);
    }
    write(&cfg.out_dir.join("sweep.csv"), &csv)?;
    Ok(rows)
}
