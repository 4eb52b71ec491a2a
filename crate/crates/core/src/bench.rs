//! Experiment harness behind the `spsa-fs` binary.
//!
//! An experiment is one TOML file (see [`ExperimentConfig`]). Each
//! (method, repetition) cell takes its seeds from the root seed:
//!
//! * run seed `derive_seed(root_seed, "run", r)` drives the SPSA perturbations
//!   and noise seeds,
//! * evaluation seed `derive_seed(root_seed, "eval", r)` fixes the CV folds used
//!   to score every reported subset, so all methods of a repetition are
//!   compared on the same folds.
//!
//! The `seed` keys inside the `[spsafs]` and `[bspsa]` sections are replaced by
//! the run seed. Wall times only appear in `timings.csv` and the last column of
//! `table.csv`; every other output is a pure function of the config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::{self, Ranking, SearchBudget, SearchOutcome, EXHAUSTIVE_MAX_P};
use crate::data_io::{self, CsvSchema, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evaluators::{CvConfig, CvEvaluator, ModelSpec};
use crate::loss::{CountingEvaluator, LossEvaluator};
use crate::seed::derive_seed;
use crate::spsa::{self, BspsaConfig, SpsaFsConfig};
use crate::types::{Dataset, FeatureMask, RunTrace, TaskKind, WeightVector};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPSA_FS_OUT";

pub const TRACE_COLUMNS: [&str; 7] = [
    "k",
    "y_plus",
    "y_minus",
    "gain_used",
    "running_best_loss",
    "mask_plus_hex",
    "mask_minus_hex",
];
pub const TABLE_COLUMNS: [&str; 7] = [
    "method",
    "runs",
    "failures",
    "mean_loss",
    "sd_loss",
    "mean_evaluations",
    "mean_wall_time_s",
];
pub const TIMING_COLUMNS: [&str; 3] = ["method", "repetition", "wall_time_s"];
pub const RANK_COLUMNS: [&str; 5] = ["method", "m", "model", "mean_loss", "sd"];
pub const CURVE_COLUMNS: [&str; 5] = ["method", "percent", "features", "mean_loss", "sd"];

/// Starting weight of every feature for the SPSA methods.
const INITIAL_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spsafs,
    Bspsa,
    Sfs,
    Sbs,
    Sffs,
    Sfbs,
    Correlation,
    Relief,
    Exhaustive,
    Full,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spsafs => "spsafs",
            Method::Bspsa => "bspsa",
            Method::Sfs => "sfs",
            Method::Sbs => "sbs",
            Method::Sffs => "sffs",
            Method::Sfbs => "sfbs",
            Method::Correlation => "correlation",
            Method::Relief => "relief",
            Method::Exhaustive => "exhaustive",
            Method::Full => "full",
        }
    }

    /// Methods that yield a full feature ordering.
    pub fn ranks(self) -> bool {
        matches!(self, Method::Spsafs | Method::Bspsa | Method::Correlation | Method::Relief)
    }

    fn traced(self) -> bool {
        matches!(self, Method::Spsafs | Method::Bspsa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A relative `path` is resolved against the config file's directory.
    Csv { path: PathBuf, schema: CsvSchema },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliefSection {
    /// Rows sampled per run; every row once when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSection {
    pub m_list: Vec<usize>,
    /// Models scored on each top-m mask; the experiment's `model` when empty.
    pub models: Vec<ModelSpec>,
}

impl Default for RankSection {
    fn default() -> Self {
        Self {
            m_list: (1..=8).map(|i| 5 * i).collect(),
            models: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressSection {
    /// Subset sizes as percentages of `p`, rounded up to whole features.
    pub percentages: Vec<u32>,
}

impl Default for RegressSection {
    fn default() -> Self {
        Self {
            percentages: (1..=10).map(|i| 10 * i).collect(),
        }
    }
}

/// One experiment file.
///
/// ```toml
/// methods = ["spsafs", "sfs", "full"]
/// repetitions = 3
/// root_seed = 7
///
/// [dataset.synthetic]
/// n = 120
/// p = 8
/// informative = [1, 2]
/// task = "classification"
///
/// [model]
/// kind = "knn"
/// k = 5
///
/// [spsafs]
/// iterations = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "current_schema")]
    pub schema_version: u32,
    pub methods: Vec<Method>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSource,
    pub model: ModelSpec,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub spsafs: SpsaFsConfig,
    #[serde(default)]
    pub bspsa: BspsaConfig,
    #[serde(default)]
    pub sfs: SearchBudget,
    #[serde(default)]
    pub sbs: SearchBudget,
    #[serde(default)]
    pub sffs: SearchBudget,
    #[serde(default)]
    pub sfbs: SearchBudget,
    #[serde(default)]
    pub relief: ReliefSection,
    #[serde(default)]
    pub rank: RankSection,
    #[serde(default)]
    pub regress: RegressSection,
}

fn current_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_repetitions() -> usize {
    10
}

/// Which subcommand a config is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Rank,
    Regress,
}

fn at(field: impl Into<String>) -> impl FnOnce(Error) -> Error {
    let field = field.into();
    move |e| match e {
        Error::Config { .. } | Error::Io { .. } | Error::Csv { .. } | Error::Cell { .. } => e,
        other => Error::config(field, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.message()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::config(field, e.into_inner().message())
        })
    }

    /// Reads a config file, resolving a relative CSV path against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let DatasetSource::Csv { path: csv, .. } = &mut cfg.dataset {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::config(format!("methods[{i}]"), format!("{} listed twice", m.name())));
            }
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be at least 1"));
        }
        self.model.validate().map_err(at("model"))?;
        if self.cv.folds < 2 {
            return Err(Error::config("cv.folds", "need at least 2 folds"));
        }
        self.spsafs.validate().map_err(at("spsafs"))?;
        self.bspsa.validate().map_err(at("bspsa"))?;
        for (name, budget) in [("sfs", &self.sfs), ("sbs", &self.sbs), ("sffs", &self.sffs), ("sfbs", &self.sfbs)] {
            if budget.max_evaluations == 0 {
                return Err(Error::config(format!("{name}.max_evaluations"), "must be at least 1"));
            }
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate().map_err(at("dataset.synthetic"))?;
        }
        if self.rank.m_list.is_empty() {
            return Err(Error::config("rank.m_list", "must not be empty"));
        }
        for (i, &m) in self.rank.m_list.iter().enumerate() {
            if m == 0 {
                return Err(Error::config(format!("rank.m_list[{i}]"), "m must be at least 1"));
            }
        }
        for (i, model) in self.rank.models.iter().enumerate() {
            model.validate().map_err(at(format!("rank.models[{i}]")))?;
        }
        if self.regress.percentages.is_empty() {
            return Err(Error::config("regress.percentages", "must not be empty"));
        }
        for (i, &q) in self.regress.percentages.iter().enumerate() {
            if q == 0 || q > 100 {
                return Err(Error::config(format!("regress.percentages[{i}]"), format!("{q} outside 1..=100")));
            }
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Csv { path, schema } => data_io::load_csv(path, schema),
            DatasetSource::Synthetic(spec) => data_io::make_synthetic(spec).map_err(at("dataset.synthetic")),
        }
    }

    /// Checks that depend on the loaded data and the subcommand.
    pub fn check_against(&self, dataset: &Dataset, command: Command) -> Result<()> {
        let task = dataset.task_kind();
        let p = dataset.p();
        let incompatible = |field: String, model: &ModelSpec| {
            Error::config(field, format!("model {} cannot be used for a {task} task", model.name()))
        };
        if self.model.task_kind() != task {
            return Err(incompatible("model".into(), &self.model));
        }
        if dataset.n() < self.cv.folds {
            return Err(Error::config("cv.folds", format!("{} folds but only {} rows", self.cv.folds, dataset.n())));
        }
        for (i, &m) in self.methods.iter().enumerate() {
            let field = format!("methods[{i}]");
            match m {
                Method::Exhaustive if p > EXHAUSTIVE_MAX_P => {
                    return Err(Error::config(field, format!("exhaustive search needs p <= {EXHAUSTIVE_MAX_P}, data has p = {p}")));
                }
                Method::Relief if task != TaskKind::Classification => {
                    return Err(Error::config(field, "relief needs a classification target"));
                }
                _ => {}
            }
            match command {
                Command::Rank if !(m.ranks() || m == Method::Full) => {
                    return Err(Error::config(field, format!("{} does not produce a feature ranking", m.name())));
                }
                Command::Regress if m == Method::Exhaustive => {
                    return Err(Error::config(field, "exhaustive search has no subset-size sweep"));
                }
                _ => {}
            }
        }
        for (name, budget) in [("sfs", &self.sfs), ("sbs", &self.sbs), ("sffs", &self.sffs), ("sfbs", &self.sfbs)] {
            if let Some(t) = budget.target_subset_size {
                if t == 0 || t > p {
                    return Err(Error::config(format!("{name}.target_subset_size"), format!("{t} outside 1..={p}")));
                }
            }
        }
        match command {
            Command::Run => {}
            Command::Rank => {
                for (i, &m) in self.rank.m_list.iter().enumerate() {
                    if m > p {
                        return Err(Error::config(format!("rank.m_list[{i}]"), format!("m = {m} exceeds p = {p}")));
                    }
                }
                for (i, model) in self.rank.models.iter().enumerate() {
                    if model.task_kind() != task {
                        return Err(incompatible(format!("rank.models[{i}]"), model));
                    }
                }
            }
            Command::Regress => {
                if task != TaskKind::Regression {
                    return Err(Error::config("dataset", "regress needs a regression target"));
                }
                if self.model != ModelSpec::Ols {
                    return Err(Error::config("model", "regress uses the ols model"));
                }
            }
        }
        Ok(())
    }

    /// Validates, loads the data and checks it against `command`.
    pub fn prepare(&self, command: Command) -> Result<Dataset> {
        self.validate()?;
        let dataset = self.load_dataset()?;
        self.check_against(&dataset, command)?;
        Ok(dataset)
    }

    pub fn run_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.root_seed, "run", repetition as u64)
    }

    pub fn eval_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.root_seed, "eval", repetition as u64)
    }

    fn budget(&self, method: Method) -> SearchBudget {
        match method {
            Method::Sbs => self.sbs,
            Method::Sffs => self.sffs,
            Method::Sfbs => self.sfbs,
            _ => self.sfs,
        }
    }

    fn rank_models(&self) -> Vec<ModelSpec> {
        if self.rank.models.is_empty() {
            vec![self.model]
        } else {
            self.rank.models.clone()
        }
    }

    fn run_spsa(&self, method: Method, evaluator: &dyn LossEvaluator, p: usize, repetition: usize) -> Result<RunTrace> {
        let w0 = WeightVector::uniform(p, INITIAL_WEIGHT);
        let seed = self.run_seed(repetition);
        match method {
            Method::Spsafs => spsa::run_spsafs(evaluator, &w0, &SpsaFsConfig { seed, ..self.spsafs }),
            Method::Bspsa => spsa::run_bspsa(evaluator, &w0, &BspsaConfig { seed, ..self.bspsa }),
            _ => Err(Error::invalid(format!("{} is not an SPSA method", method.name()))),
        }
    }

    /// Feature ordering of a ranking method in one repetition.
    fn ordering(&self, method: Method, dataset: &Dataset, evaluator: &dyn LossEvaluator, repetition: usize) -> Result<Vec<usize>> {
        match method {
            Method::Correlation => Ok(baselines::rank_correlation(dataset).order),
            Method::Relief => {
                let seed = derive_seed(self.root_seed, "relief", repetition as u64);
                Ok(baselines::rank_relief(dataset, self.relief.samples, seed)?.order)
            }
            Method::Spsafs | Method::Bspsa => {
                let trace = self.run_spsa(method, evaluator, dataset.p(), repetition)?;
                spsa::rank_features(&trace.final_weights, dataset.p())
            }
            _ => Err(Error::invalid(format!("{} does not rank features", method.name()))),
        }
    }
}

/// Runs `f` on a rayon pool limited to `jobs` threads, or the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::config("--jobs", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// What a subcommand wrote and which cells failed.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Report {
    /// 0 when every cell succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Result of one (method, repetition) cell of `run`.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub method: Method,
    pub repetition: usize,
    pub wall_time: f64,
    pub outcome: std::result::Result<CellOutcome, String>,
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub mask: FeatureMask,
    /// Loss reported by the search itself.
    pub search_loss: f64,
    /// Loss of `mask` under the repetition's evaluation seed.
    pub loss: f64,
    /// Evaluator invocations made by the search.
    pub evaluations: usize,
    pub truncated: bool,
    pub trace: Option<RunTrace>,
}

fn from_search(outcome: SearchOutcome) -> CellOutcome {
    CellOutcome {
        mask: outcome.mask,
        search_loss: outcome.loss,
        loss: outcome.loss,
        evaluations: 0,
        truncated: outcome.truncated,
        trace: None,
    }
}

/// Best prefix of a ranking under `noise_seed`; ties keep the shorter prefix.
fn best_prefix<E: LossEvaluator + ?Sized>(evaluator: &E, ranking: &Ranking, noise_seed: u64) -> Result<(FeatureMask, f64)> {
    let mut best: Option<(FeatureMask, f64)> = None;
    for m in 1..=ranking.order.len() {
        let mask = ranking.top(m)?;
        let loss = evaluator.evaluate(&mask, noise_seed)?;
        if best.as_ref().is_none_or(|(_, l)| loss < *l) {
            best = Some((mask, loss));
        }
    }
    best.ok_or(Error::EmptyMask)
}

fn run_cell(cfg: &ExperimentConfig, dataset: &Dataset, method: Method, repetition: usize) -> Result<CellOutcome> {
    let p = dataset.p();
    let eval_seed = cfg.eval_seed(repetition);
    let cv = CvEvaluator::new(dataset, cfg.model, cfg.cv)?;
    let counting = CountingEvaluator::new(cv);
    let mut outcome = match method {
        Method::Spsafs | Method::Bspsa => {
            let trace = cfg.run_spsa(method, &counting, p, repetition)?;
            CellOutcome {
                mask: trace.best_mask.clone(),
                search_loss: trace.best_loss,
                loss: trace.best_loss,
                evaluations: 0,
                truncated: false,
                trace: Some(trace),
            }
        }
        Method::Sfs => from_search(baselines::sfs(&counting, p, &cfg.sfs, eval_seed)?),
        Method::Sbs => from_search(baselines::sbs(&counting, p, &cfg.sbs, eval_seed)?),
        Method::Sffs => from_search(baselines::sffs(&counting, p, &cfg.sffs, eval_seed)?),
        Method::Sfbs => from_search(baselines::sfbs(&counting, p, &cfg.sfbs, eval_seed)?),
        Method::Correlation | Method::Relief => {
            let ranking = Ranking {
                order: cfg.ordering(method, dataset, &counting, repetition)?,
                scores: Vec::new(),
                hits_skipped: 0,
            };
            let (mask, loss) = best_prefix(&counting, &ranking, eval_seed)?;
            CellOutcome {
                mask,
                search_loss: loss,
                loss,
                evaluations: 0,
                truncated: false,
                trace: None,
            }
        }
        Method::Exhaustive => {
            let best = baselines::exhaustive_best(&counting, p, eval_seed)?;
            CellOutcome {
                mask: best.mask,
                search_loss: best.loss,
                loss: best.loss,
                evaluations: 0,
                truncated: false,
                trace: None,
            }
        }
        Method::Full => {
            let mask = FeatureMask::full(p);
            let loss = counting.evaluate(&mask, eval_seed)?;
            CellOutcome {
                mask,
                search_loss: loss,
                loss,
                evaluations: 0,
                truncated: false,
                trace: None,
            }
        }
    };
    outcome.evaluations = counting.calls();
    let evaluator = counting.into_inner();
    outcome.loss = if outcome.mask.none_selected() {
        evaluator.empty_loss()
    } else {
        evaluator.evaluate(&outcome.mask, eval_seed)?
    };
    Ok(outcome)
}

fn cell_stem(method: Method, repetition: usize) -> String {
    format!("{}-r{repetition}", method.name())
}

fn float(x: f64) -> String {
    format!("{x}")
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    write_file(path, &bytes)
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                float(r.y_plus),
                float(r.y_minus),
                float(r.gain_used),
                float(r.running_best_loss),
                r.mask_plus.to_hex(),
                r.mask_minus.to_hex(),
            ]
        })
        .collect();
    write_rows(path, &TRACE_COLUMNS, &rows)
}

fn dataset_json(dataset: &Dataset) -> serde_json::Value {
    json!({ "n": dataset.n(), "p": dataset.p(), "task": dataset.task_kind() })
}

fn cell_json(cfg: &ExperimentConfig, cell: &CellResult) -> serde_json::Value {
    let mut value = json!({
        "schema_version": SCHEMA_VERSION,
        "method": cell.method.name(),
        "repetition": cell.repetition,
        "run_seed": cfg.run_seed(cell.repetition),
        "eval_seed": cfg.eval_seed(cell.repetition),
    });
    let fields = match &cell.outcome {
        Ok(o) => json!({
            "status": "ok",
            "best_mask": o.mask.one_based(),
            "best_mask_hex": o.mask.to_hex(),
            "selected": o.mask.count(),
            "search_loss": o.search_loss,
            "best_loss": o.loss,
            "evaluations": o.evaluations,
            "iterations": o.trace.as_ref().map(|t| t.iterations_run),
            "truncated": o.truncated,
        }),
        Err(message) => json!({ "status": "failed", "error": message }),
    };
    if let (Some(map), serde_json::Value::Object(extra)) = (value.as_object_mut(), fields) {
        map.extend(extra);
    }
    value
}

fn manifest(dir: &Path, command: &str, entries: &[(&str, &str, &[&str])]) -> Result<PathBuf> {
    let files: Vec<serde_json::Value> = entries
        .iter()
        .map(|(file, schema, columns)| json!({ "file": file, "schema": schema, "columns": columns }))
        .collect();
    let path = dir.join("manifest.json");
    write_json(
        &path,
        &json!({ "schema_version": SCHEMA_VERSION, "command": command, "files": files }),
    )?;
    Ok(path)
}

/// Runs every (method, repetition) cell and writes traces, summaries and tables under `out`.
///
/// Layout: `traces/<method>-r<rep>.csv` for the SPSA methods,
/// `cells/<method>-r<rep>.json`, `summary.json`, `table.csv`, `timings.csv`
/// and `manifest.json`. A failing cell is recorded and the run continues.
pub fn cmd_run(cfg: &ExperimentConfig, dataset: &Dataset, out: &Path) -> Result<Report> {
    let traces_dir = out.join("traces");
    let cells_dir = out.join("cells");
    create_dir(&traces_dir)?;
    create_dir(&cells_dir)?;
    let grid: Vec<(Method, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();

    let cells: Vec<Result<CellResult>> = grid
        .par_iter()
        .map(|&(method, repetition)| {
            let start = Instant::now();
            let outcome = run_cell(cfg, dataset, method, repetition).map_err(|e| e.to_string());
            let cell = CellResult {
                method,
                repetition,
                wall_time: start.elapsed().as_secs_f64(),
                outcome,
            };
            let stem = cell_stem(method, repetition);
            if let Ok(CellOutcome { trace: Some(trace), .. }) = &cell.outcome {
                write_trace(&traces_dir.join(format!("{stem}.csv")), trace)?;
            }
            write_json(&cells_dir.join(format!("{stem}.json")), &cell_json(cfg, &cell))?;
            Ok(cell)
        })
        .collect();
    let cells: Vec<CellResult> = cells.into_iter().collect::<Result<_>>()?;

    let mut report = Report::default();
    for cell in &cells {
        let stem = cell_stem(cell.method, cell.repetition);
        if cell.method.traced() && cell.outcome.is_ok() {
            report.files.push(traces_dir.join(format!("{stem}.csv")));
        }
        report.files.push(cells_dir.join(format!("{stem}.json")));
        if let Err(message) = &cell.outcome {
            report.failures.push(format!("{stem}: {message}"));
        }
    }

    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "run",
        "root_seed": cfg.root_seed,
        "repetitions": cfg.repetitions,
        "model": cfg.model.name(),
        "dataset": dataset_json(dataset),
        "cells": cells.iter().map(|c| cell_json(cfg, c)).collect::<Vec<_>>(),
    });
    let summary_path = out.join("summary.json");
    write_json(&summary_path, &summary)?;

    let mut table = Vec::new();
    for &method in &cfg.methods {
        let mine: Vec<&CellResult> = cells.iter().filter(|c| c.method == method).collect();
        let ok: Vec<&CellOutcome> = mine.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
        let losses: Vec<f64> = ok.iter().map(|o| o.loss).collect();
        let (mean, sd) = mean_sd(&losses);
        let evals = ok.iter().map(|o| o.evaluations as f64).sum::<f64>() / ok.len().max(1) as f64;
        let wall = mine.iter().map(|c| c.wall_time).sum::<f64>() / mine.len().max(1) as f64;
        table.push(vec![
            method.name().to_string(),
            ok.len().to_string(),
            (mine.len() - ok.len()).to_string(),
            float(mean),
            float(sd),
            float(evals),
            float(wall),
        ]);
    }
    let table_path = out.join("table.csv");
    write_rows(&table_path, &TABLE_COLUMNS, &table)?;

    let timings: Vec<Vec<String>> = cells
        .iter()
        .map(|c| vec![c.method.name().to_string(), c.repetition.to_string(), float(c.wall_time)])
        .collect();
    let timings_path = out.join("timings.csv");
    write_rows(&timings_path, &TIMING_COLUMNS, &timings)?;

    let manifest_path = manifest(
        out,
        "run",
        &[
            ("traces/*.csv", "trace", &TRACE_COLUMNS),
            ("table.csv", "table", &TABLE_COLUMNS),
            ("timings.csv", "timings", &TIMING_COLUMNS),
        ],
    )?;
    report.files.extend([summary_path, table_path, timings_path, manifest_path]);
    Ok(report)
}

/// Scores the top-`m` features of each ranking method for every `m` in
/// `rank.m_list` and every model in `rank.models`.
///
/// Writes `rank.csv` (one row per method, m and model, mean and sample sd
/// over repetitions), `rankings.json` with the orderings, and `manifest.json`.
/// The `full` method contributes a single `m = p` row per model.
pub fn cmd_rank(cfg: &ExperimentConfig, dataset: &Dataset, out: &Path) -> Result<Report> {
    create_dir(out)?;
    let p = dataset.p();
    let models = cfg.rank_models();
    let rankers: Vec<Method> = cfg.methods.iter().copied().filter(|m| m.ranks()).collect();
    let grid: Vec<(Method, usize)> = rankers
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();
    let base = CvEvaluator::new(dataset, cfg.model, cfg.cv)?;
    let orders: Vec<Result<Vec<usize>>> = grid
        .par_iter()
        .map(|&(method, r)| cfg.ordering(method, dataset, &base, r))
        .collect();

    let mut report = Report::default();
    let mut by_method: BTreeMap<Method, Vec<Vec<usize>>> = BTreeMap::new();
    for (&(method, r), order) in grid.iter().zip(orders) {
        match order {
            Ok(o) => by_method.entry(method).or_default().push(o),
            Err(e) => report.failures.push(format!("{}: {e}", cell_stem(method, r))),
        }
    }

    // (method, m, model index) -> losses over repetitions
    let mut jobs: Vec<(Method, usize, usize, usize)> = Vec::new();
    for &method in &cfg.methods {
        let sizes: Vec<usize> = if method == Method::Full { vec![p] } else { cfg.rank.m_list.clone() };
        if method.ranks() && by_method.get(&method).is_none_or(|o| o.len() < cfg.repetitions) {
            continue;
        }
        for model in 0..models.len() {
            for &m in &sizes {
                for r in 0..cfg.repetitions {
                    jobs.push((method, m, model, r));
                }
            }
        }
    }
    let losses: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(method, m, model, r)| {
            let mask = match method {
                Method::Full => FeatureMask::full(p),
                _ => FeatureMask::from_indices(p, &by_method[&method][r][..m])?,
            };
            CvEvaluator::new(dataset, models[model], cfg.cv)?.evaluate(&mask, cfg.eval_seed(r))
        })
        .collect();

    let mut rows = Vec::new();
    let mut i = 0;
    while i < jobs.len() {
        let (method, m, model, _) = jobs[i];
        let block = &losses[i..i + cfg.repetitions];
        i += cfg.repetitions;
        let mut values = Vec::new();
        for l in block {
            match l {
                Ok(v) => values.push(*v),
                Err(e) => report.failures.push(format!("{} m={m} {}: {e}", method.name(), models[model].name())),
            }
        }
        if values.len() < block.len() {
            continue;
        }
        let (mean, sd) = mean_sd(&values);
        rows.push(vec![method.name().to_string(), m.to_string(), models[model].name(), float(mean), float(sd)]);
    }
    let rank_path = out.join("rank.csv");
    write_rows(&rank_path, &RANK_COLUMNS, &rows)?;

    let rankings: serde_json::Map<String, serde_json::Value> = by_method
        .iter()
        .map(|(m, orders)| {
            let one_based: Vec<Vec<usize>> = orders.iter().map(|o| o.iter().map(|j| j + 1).collect()).collect();
            (m.name().to_string(), json!(one_based))
        })
        .collect();
    let rankings_path = out.join("rankings.json");
    write_json(
        &rankings_path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "root_seed": cfg.root_seed,
            "dataset": dataset_json(dataset),
            "orderings": rankings,
        }),
    )?;
    let manifest_path = manifest(out, "rank", &[("rank.csv", "rank", &RANK_COLUMNS)])?;
    report.files.extend([rank_path, rankings_path, manifest_path]);
    Ok(report)
}

/// Whole features covering `percent` of `p`, at least one.
pub fn features_for(percent: u32, p: usize) -> usize {
    ((percent as usize * p).div_ceil(100)).max(1)
}

fn sweep_mask(cfg: &ExperimentConfig, method: Method, evaluator: &CvEvaluator<'_>, order: Option<&[usize]>, size: usize, r: usize) -> Result<FeatureMask> {
    let p = evaluator.dataset.p();
    let seed = cfg.eval_seed(r);
    let budget = cfg.budget(method).with_target(size);
    match method {
        Method::Full => Ok(FeatureMask::full(p)),
        Method::Sfs => Ok(baselines::sfs(evaluator, p, &budget, seed)?.mask),
        Method::Sbs => Ok(baselines::sbs(evaluator, p, &budget, seed)?.mask),
        Method::Sffs => Ok(baselines::sffs(evaluator, p, &budget, seed)?.mask),
        Method::Sfbs => Ok(baselines::sfbs(evaluator, p, &budget, seed)?.mask),
        _ => {
            let order = order.ok_or_else(|| Error::invalid(format!("{} has no ordering", method.name())))?;
            FeatureMask::from_indices(p, &order[..size])
        }
    }
}

/// Sweeps subset sizes over `regress.percentages` of `p` and records the OLS
/// 1−R² of each method's subset at each size.
///
/// Rankers take their top features; the sequential searches run to the
/// target size; `full` contributes only the 100% point. Writes `curve.csv` and
/// `manifest.json`.
pub fn cmd_regress(cfg: &ExperimentConfig, dataset: &Dataset, out: &Path) -> Result<Report> {
    create_dir(out)?;
    let p = dataset.p();
    let evaluator = CvEvaluator::new(dataset, cfg.model, cfg.cv)?;
    let mut report = Report::default();

    let ordering_grid: Vec<(Method, usize)> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| m.ranks())
        .flat_map(|m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();
    let orderings: Vec<Result<Vec<usize>>> = ordering_grid
        .par_iter()
        .map(|&(m, r)| cfg.ordering(m, dataset, &evaluator, r))
        .collect();
    let mut orders: BTreeMap<(Method, usize), Vec<usize>> = BTreeMap::new();
    for (&(m, r), o) in ordering_grid.iter().zip(orderings) {
        match o {
            Ok(o) => {
                orders.insert((m, r), o);
            }
            Err(e) => report.failures.push(format!("{}: {e}", cell_stem(m, r))),
        }
    }

    let mut points: Vec<(Method, u32)> = Vec::new();
    for &method in &cfg.methods {
        for &q in &cfg.regress.percentages {
            if method != Method::Full || q == 100 {
                points.push((method, q));
            }
        }
    }
    let results: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|&(method, q)| {
            let size = features_for(q, p);
            (0..cfg.repetitions)
                .map(|r| {
                    let order = orders.get(&(method, r)).map(Vec::as_slice);
                    if method.ranks() && order.is_none() {
                        return Err(Error::invalid("ordering failed"));
                    }
                    let mask = sweep_mask(cfg, method, &evaluator, order, size, r)?;
                    evaluator.evaluate(&mask, cfg.eval_seed(r))
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for (&(method, q), result) in points.iter().zip(results) {
        match result {
            Ok(values) => {
                let (mean, sd) = mean_sd(&values);
                rows.push(vec![
                    method.name().to_string(),
                    q.to_string(),
                    features_for(q, p).to_string(),
                    float(mean),
                    float(sd),
                ]);
            }
            Err(e) => report.failures.push(format!("{} {q}%: {e}", method.name())),
        }
    }
    let curve_path = out.join("curve.csv");
    write_rows(&curve_path, &CURVE_COLUMNS, &rows)?;
    let manifest_path = manifest(out, "regress", &[("curve.csv", "curve", &CURVE_COLUMNS)])?;
    report.files.extend([curve_path, manifest_path]);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
methods = ["spsafs", "sfs", "exhaustive", "full"]
repetitions = 3
root_seed = 11

[dataset.synthetic]
n = 120
p = 8
informative = [1, 2, 3]
noise_sd = 0.5
task = "classification"
seed = 3

[model]
kind = "gaussian_nb"

[spsafs]
iterations = 60
"#;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(SMALL).unwrap()
    }

    #[test]
    fn parses_with_defaults() {
        let cfg = small();
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        assert_eq!(cfg.cv, CvConfig::default());
        assert_eq!(cfg.spsafs.iterations, 60);
        assert_eq!(cfg.spsafs.smoothing_window, SpsaFsConfig::default().smoothing_window);
        assert_eq!(cfg.rank.m_list, vec![5, 10, 15, 20, 25, 30, 35, 40]);
        assert_eq!(cfg.regress.percentages.len(), 10);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = SMALL.replace("iterations = 60", "iterations = 60\nsmoothing = 3");
        match ExperimentConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "spsafs.smoothing"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_its_path() {
        let text = SMALL.replace("n = 120", "n = \"many\"");
        match ExperimentConfig::from_toml_str(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "dataset.synthetic.n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn effective_config_round_trips() {
        let mut cfg = small();
        cfg.spsafs.bb_variant = None;
        cfg.spsafs.gradient_averaging = crate::gain::GradientAveraging::FixedWindow(4);
        let text = cfg.to_toml().unwrap();
        assert!(text.contains("bb_variant = \"off\""), "{text}");
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn validation_points_at_fields() {
        let field = |cfg: &ExperimentConfig| match cfg.validate() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        let mut cfg = small();
        cfg.methods.clear();
        assert_eq!(field(&cfg), "methods");
        let mut cfg = small();
        cfg.methods.push(Method::Sfs);
        assert_eq!(field(&cfg), "methods[4]");
        let mut cfg = small();
        cfg.repetitions = 0;
        assert_eq!(field(&cfg), "repetitions");
        let mut cfg = small();
        cfg.regress.percentages = vec![10, 150];
        assert_eq!(field(&cfg), "regress.percentages[1]");
    }

    #[test]
    fn data_checks() {
        let cfg = small();
        let data = cfg.load_dataset().unwrap();
        cfg.check_against(&data, Command::Run).unwrap();
        assert!(matches!(cfg.check_against(&data, Command::Rank), Err(Error::Config { field, .. }) if field == "methods[1]"));
        assert!(matches!(cfg.check_against(&data, Command::Regress), Err(Error::Config { field, .. }) if field == "methods[2]"));

        let mut wide = cfg.clone();
        if let DatasetSource::Synthetic(spec) = &mut wide.dataset {
            spec.p = 24;
        }
        let data = wide.load_dataset().unwrap();
        assert!(matches!(wide.check_against(&data, Command::Run), Err(Error::Config { field, .. }) if field == "methods[2]"));

        let mut rank = cfg.clone();
        rank.methods = vec![Method::Correlation];
        rank.rank.m_list = vec![2, 9];
        let data = rank.load_dataset().unwrap();
        assert!(matches!(rank.check_against(&data, Command::Rank), Err(Error::Config { field, .. }) if field == "rank.m_list[1]"));
    }

    #[test]
    fn feature_counts_round_up() {
        assert_eq!(features_for(10, 8), 1);
        assert_eq!(features_for(30, 8), 3);
        assert_eq!(features_for(100, 8), 8);
        assert_eq!(features_for(10, 60), 6);
    }

    #[test]
    fn mean_sd_oracle() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[0.3]), (0.3, 0.0));
    }

    #[test]
    fn run_cell_counts_match_evaluator() {
        let cfg = small();
        let data = cfg.load_dataset().unwrap();
        for method in [Method::Spsafs, Method::Sfs, Method::Exhaustive, Method::Full] {
            let cell = run_cell(&cfg, &data, method, 0).unwrap();
            let expected = match (method, &cell.trace) {
                (_, Some(trace)) => trace.evaluations,
                (Method::Exhaustive, _) => 255,
                (Method::Full, _) => 1,
                _ => cell.evaluations,
            };
            assert_eq!(cell.evaluations, expected, "{method:?}");
        }
    }
}
