//! Dataset ingestion from delimited text and seeded synthetic generators.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeededRng;
use crate::types::{intern_labels, Dataset, Target, TaskKind};

pub use crate::seed::derive_seed;

/// Cells read as missing.
pub const MISSING_TOKENS: [&str; 4] = ["", "NA", "?", "NaN"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Reject,
    DropRow,
}

/// How to read a CSV file into a [`Dataset`].
///
/// Without a header row, columns are named by their 1-based position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub target: String,
    pub task: TaskKind,
    #[serde(default)]
    pub drop_columns: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub missing: MissingPolicy,
}

fn default_delimiter() -> char {
    ','
}

fn default_true() -> bool {
    true
}

impl CsvSchema {
    pub fn new(target: impl Into<String>, task: TaskKind) -> Self {
        Self {
            target: target.into(),
            task,
            drop_columns: Vec::new(),
            delimiter: ',',
            has_header: true,
            missing: MissingPolicy::Reject,
        }
    }

    pub fn drop_column(mut self, name: impl Into<String>) -> Self {
        self.drop_columns.push(name.into());
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, &path.display().to_string(), schema)
}

/// [`load_csv`] over any reader; `source` names it in error messages.
pub fn read_csv(reader: impl std::io::Read, source: &str, schema: &CsvSchema) -> Result<Dataset> {
    let csv_error = |message: String| Error::Csv {
        path: source.to_string(),
        message,
    };
    if !schema.delimiter.is_ascii() {
        return Err(csv_error(format!("delimiter {:?} is not a single byte", schema.delimiter)));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Err(csv_error("empty file".into())),
        Some(r) => r.map_err(|e| csv_error(e.to_string()))?,
    };
    let (names, mut pending): (Vec<String>, Option<csv::StringRecord>) = if schema.has_header {
        (first.iter().map(str::to_string).collect(), None)
    } else {
        ((1..=first.len()).map(|i| i.to_string()).collect(), Some(first))
    };
    let target_col = names
        .iter()
        .position(|n| *n == schema.target)
        .ok_or_else(|| csv_error(format!("target column '{}' not found", schema.target)))?;
    for d in &schema.drop_columns {
        if !names.contains(d) {
            return Err(csv_error(format!("drop column '{d}' not found")));
        }
        if *d == schema.target {
            return Err(csv_error(format!("cannot drop the target column '{d}'")));
        }
    }
    let features: Vec<usize> = (0..names.len())
        .filter(|&j| j != target_col && !schema.drop_columns.contains(&names[j]))
        .collect();
    if features.is_empty() {
        return Err(csv_error("no feature columns".into()));
    }

    let header_lines = usize::from(schema.has_header);
    let mut x = Vec::new();
    let mut raw_target = Vec::new();
    let mut row_no = 0;
    loop {
        let record = match pending.take() {
            Some(r) => r,
            None => match records.next() {
                None => break,
                Some(r) => r.map_err(|e| csv_error(e.to_string()))?,
            },
        };
        row_no += 1;
        let line = row_no + header_lines;
        let cell_error = |j: usize, message: String| Error::Cell {
            path: source.to_string(),
            row: line,
            column: names[j].clone(),
            message,
        };
        if record.len() != names.len() {
            return Err(csv_error(format!("line {line}: expected {} fields, found {}", names.len(), record.len())));
        }
        let missing = |j: usize| MISSING_TOKENS.contains(&&record[j]);
        if let Some(j) = features.iter().copied().chain([target_col]).find(|&j| missing(j)) {
            match schema.missing {
                MissingPolicy::Reject => return Err(cell_error(j, "missing value".into())),
                MissingPolicy::DropRow => continue,
            }
        }
        for &j in &features {
            let v: f64 = record[j]
                .parse()
                .map_err(|_| cell_error(j, format!("'{}' is not a number", &record[j])))?;
            if !v.is_finite() {
                return Err(cell_error(j, format!("'{}' is not finite", &record[j])));
            }
            x.push(v);
        }
        let t = &record[target_col];
        if schema.task == TaskKind::Regression {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| cell_error(target_col, format!("'{t}' is not a finite number")))?;
        }
        raw_target.push(t.to_string());
    }
    let n = raw_target.len();
    if n == 0 {
        return Err(csv_error("no data rows".into()));
    }
    let target = match schema.task {
        TaskKind::Regression => Target::Real(raw_target.iter().map(|t| t.parse().unwrap()).collect()),
        TaskKind::Classification => {
            let (codes, labels) = intern_labels(&raw_target);
            Target::Classes { codes, labels }
        }
    };
    let feature_names = features.iter().map(|&j| names[j].clone()).collect();
    Dataset::new(x, n, features.len(), target, feature_names).map_err(|e| csv_error(e.to_string()))
}

/// Writes features then a final `target` column. Class labels are written as
/// their original strings; numbers use the shortest round-trip form.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_csv_to(dataset, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_csv_to(dataset: &Dataset, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("target");
    w.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut row: Vec<String> = dataset.row(i).iter().map(|v| format!("{v:?}")).collect();
        row.push(match dataset.target() {
            Target::Classes { codes, labels } => labels[codes[i]].clone(),
            Target::Real(v) => format!("{:?}", v[i]),
        });
        w.write_record(&row)?;
    }
    w.flush()
}

/// Recipe for a seeded synthetic dataset.
///
/// Every column starts as independent `N(0, 1)`. Informative features (1-based)
/// have unit coefficients in the score `s`.
/// * Classification: `y = 1{s + noise_sd·e > 0}`, then each informative
///   feature of a row is moved by `±class_margin / sqrt(k)` towards its class
///   side, so noise-free data are separable with margin `class_margin`.
/// * Regression: `y = s + noise_sd·e`.
///
/// `correlated` non-informative columns (the lowest-indexed ones) are replaced
/// by noisy copies `x_i + correlated_sd·e` of the informative features, cycling
/// through them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub informative: Vec<usize>,
    #[serde(default)]
    pub noise_sd: f64,
    pub task: TaskKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_margin")]
    pub class_margin: f64,
    #[serde(default)]
    pub correlated: usize,
    #[serde(default = "default_correlated_sd")]
    pub correlated_sd: f64,
}

fn default_margin() -> f64 {
    0.5
}

fn default_correlated_sd() -> f64 {
    0.5
}

impl SyntheticSpec {
    pub fn classification(n: usize, p: usize, informative: Vec<usize>, noise_sd: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            informative,
            noise_sd,
            task: TaskKind::Classification,
            seed,
            class_margin: default_margin(),
            correlated: 0,
            correlated_sd: default_correlated_sd(),
        }
    }

    pub fn regression(n: usize, p: usize, informative: Vec<usize>, noise_sd: f64, seed: u64) -> Self {
        Self {
            task: TaskKind::Regression,
            ..Self::classification(n, p, informative, noise_sd, seed)
        }
    }

    /// The first `k` features are informative.
    pub fn leading(task: TaskKind, n: usize, p: usize, k: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            task,
            ..Self::classification(n, p, (1..=k).collect(), noise_sd, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::invalid(format!("synthetic data needs n >= 2 and p >= 1, got n={} p={}", self.n, self.p)));
        }
        if self.informative.is_empty() {
            return Err(Error::invalid("at least one informative feature required"));
        }
        let mut seen = vec![false; self.p];
        for &j in &self.informative {
            if j == 0 || j > self.p {
                return Err(Error::invalid(format!("informative feature {j} outside 1..={}", self.p)));
            }
            if std::mem::replace(&mut seen[j - 1], true) {
                return Err(Error::invalid(format!("informative feature {j} listed twice")));
            }
        }
        if self.correlated > self.p - self.informative.len() {
            return Err(Error::invalid("more correlated copies than non-informative features"));
        }
        for (name, v) in [("noise_sd", self.noise_sd), ("class_margin", self.class_margin), ("correlated_sd", self.correlated_sd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let inf: Vec<usize> = spec.informative.iter().map(|j| j - 1).collect();
    let copies: Vec<usize> = (0..p).filter(|j| !inf.contains(j)).take(spec.correlated).collect();
    let mut rng = SeededRng::new(derive_seed(spec.seed, "synthetic", 0));
    let mut x: Vec<f64> = (0..n * p).map(|_| rng.normal()).collect();
    let mut score: Vec<f64> = (0..n).map(|i| inf.iter().map(|&j| x[i * p + j]).sum()).collect();
    for s in score.iter_mut() {
        *s += spec.noise_sd * rng.normal();
    }
    let target = match spec.task {
        TaskKind::Regression => Target::Real(score),
        TaskKind::Classification => {
            let shift = spec.class_margin / (inf.len() as f64).sqrt();
            let codes: Vec<usize> = score.iter().map(|&s| usize::from(s > 0.0)).collect();
            for (i, &c) in codes.iter().enumerate() {
                let sign = if c == 1 { 1.0 } else { -1.0 };
                for &j in &inf {
                    x[i * p + j] += sign * shift;
                }
            }
            Target::Classes {
                codes,
                labels: vec!["0".into(), "1".into()],
            }
        }
    };
    for (c, &j) in copies.iter().enumerate() {
        let src = inf[c % inf.len()];
        for i in 0..n {
            x[i * p + j] = x[i * p + src] + spec.correlated_sd * rng.normal();
        }
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(x, n, p, target, names)
}
