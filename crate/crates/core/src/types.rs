//! Shared vocabulary: weight iterates, feature masks, perturbations, datasets
//! and run traces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeededRng;

/// Binary indicator over the `p` features of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn empty(p: usize) -> Self {
        Self {
            bits: vec![false; p],
        }
    }

    pub fn full(p: usize) -> Self {
        Self { bits: vec![true; p] }
    }

    /// Builds a mask from zero-based feature indices.
    pub fn from_indices(p: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; p];
        for &j in indices {
            if j >= p {
                return Err(Error::invalid(format!("feature index {j} out of range for p = {p}")));
            }
            bits[j] = true;
        }
        Ok(Self { bits })
    }

    /// Builds a mask from 0/1 integers, as written in worked examples.
    pub fn from_binary(values: &[u8]) -> Self {
        Self {
            bits: values.iter().map(|&v| v != 0).collect(),
        }
    }

    /// Mask whose bit `j` is bit `j` of `code`.
    pub fn from_code(p: usize, code: u64) -> Self {
        Self {
            bits: (0..p).map(|j| (code >> j) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, j: usize) -> bool {
        self.bits[j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn none_selected(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Canonical sorted zero-based indices of the selected features.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
            .collect()
    }

    /// Same as [`indices`](Self::indices) but one-based, for reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices().into_iter().map(|j| j + 1).collect()
    }

    pub fn with(&self, j: usize, value: bool) -> Self {
        let mut bits = self.bits.clone();
        bits[j] = value;
        Self { bits }
    }

    pub fn as_binary(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }

    /// Hex encoding of `sum(bit_j * 2^j)`, most significant nibble first,
    /// zero padded to `ceil(p / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.bits.len().div_ceil(4).max(1);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u32;
            for b in 0..4 {
                let j = d * 4 + b;
                if j < self.bits.len() && self.bits[j] {
                    nibble |= 1 << b;
                }
            }
            out.push(std::char::from_digit(nibble, 16).unwrap());
        }
        out
    }

    pub fn from_hex(p: usize, hex: &str) -> Result<Self> {
        let mut bits = vec![false; p];
        for (d, ch) in hex.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::invalid(format!("bad hex digit '{ch}'")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let j = d * 4 + b;
                    if j >= p {
                        return Err(Error::invalid(format!("hex mask sets bit {j} beyond p = {p}")));
                    }
                    bits[j] = true;
                }
            }
        }
        Ok(Self { bits })
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Continuous iterate in (or around) the unit box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    /// The customary starting point: every weight at 0.5.
    pub fn uniform(p: usize, value: f64) -> Self {
        Self(vec![value; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Component-wise clamp into `[0, 1]`.
    pub fn bound(&self) -> Self {
        Self(self.0.iter().map(|&w| bound_component(w)).collect())
    }

    /// Component-wise rounding, ties at exactly 0.5 going up.
    pub fn round_mask(&self) -> FeatureMask {
        FeatureMask::new(self.0.iter().map(|&w| w >= 0.5).collect())
    }

    /// `self + scale * delta`, not bounded.
    pub fn perturbed(&self, delta: &PerturbationVector, scale: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(delta.as_slice())
                .map(|(w, d)| w + scale * d)
                .collect(),
        )
    }

    /// `self - gain * direction`.
    pub fn step(&self, direction: &[f64], gain: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(direction)
                .map(|(w, g)| w - gain * g)
                .collect(),
        )
    }
}

// NaN maps to 0 so the composition with rounding stays total.
fn bound_component(w: f64) -> f64 {
    if w.is_nan() {
        0.0
    } else {
        w.clamp(0.0, 1.0)
    }
}

pub fn bound(w: &WeightVector) -> WeightVector {
    w.bound()
}

pub fn round_mask(w: &WeightVector) -> FeatureMask {
    w.round_mask()
}

/// Simultaneous perturbation direction with every component in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationVector(Vec<f64>);

impl PerturbationVector {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&d| d != 1.0 && d != -1.0) {
            return Err(Error::invalid(format!("perturbation component {bad} is not ±1")));
        }
        Ok(Self(signs))
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        Self::new(signs.iter().map(|&s| f64::from(s)).collect())
    }

    /// Independent symmetric Bernoulli draws, one per component.
    pub fn sample(p: usize, rng: &mut SeededRng) -> Self {
        Self((0..p).map(|_| rng.sign()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
        })
    }
}

/// Response column: interned class codes or real values.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Classes { codes: Vec<usize>, labels: Vec<String> },
    Real(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Classes { codes, .. } => codes.len(),
            Target::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task_kind(&self) -> TaskKind {
        match self {
            Target::Classes { .. } => TaskKind::Classification,
            Target::Real(_) => TaskKind::Regression,
        }
    }

    /// Numeric view: class codes as floats or the real values.
    pub fn as_numeric(&self) -> Vec<f64> {
        match self {
            Target::Classes { codes, .. } => codes.iter().map(|&c| c as f64).collect(),
            Target::Real(v) => v.clone(),
        }
    }
}

/// Interns string labels into dense codes. Labels that all parse as numbers
/// are ordered numerically, otherwise lexicographically.
pub fn intern_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let mut labels: Vec<String> = raw.to_vec();
    labels.sort();
    labels.dedup();
    let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.trim().parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(labels).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        labels = paired.into_iter().map(|(_, l)| l).collect();
    }
    let codes = raw
        .iter()
        .map(|l| labels.iter().position(|x| x == l).unwrap())
        .collect();
    (codes, labels)
}

/// Row-major feature matrix plus response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    target: Target,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, n: usize, p: usize, target: Target, feature_names: Vec<String>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dataset needs at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::invalid("dataset needs at least one feature"));
        }
        if x.len() != n * p {
            return Err(Error::DimensionMismatch {
                expected: n * p,
                actual: x.len(),
            });
        }
        if target.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: target.len(),
            });
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: feature_names.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, feature {}",
                pos / p,
                pos % p
            )));
        }
        match &target {
            Target::Classes { codes, labels } => {
                let mut seen = vec![false; labels.len()];
                for &c in codes {
                    if c >= labels.len() {
                        return Err(Error::invalid(format!("class code {c} has no label")));
                    }
                    seen[c] = true;
                }
                if seen.iter().filter(|&&s| s).count() < 2 {
                    return Err(Error::invalid("classification needs at least two distinct labels"));
                }
            }
            Target::Real(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("non-finite response value"));
                }
            }
        }
        Ok(Self {
            n,
            p,
            x,
            target,
            feature_names,
        })
    }

    /// Builds from rows with generated names `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>], target: Target) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: r.len(),
            });
        }
        let x = rows.iter().flatten().copied().collect();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(x, n, p, target, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn task_kind(&self) -> TaskKind {
        self.target.task_kind()
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }

    /// Class codes, or `None` for regression data.
    pub fn class_codes(&self) -> Option<&[usize]> {
        match &self.target {
            Target::Classes { codes, .. } => Some(codes),
            Target::Real(_) => None,
        }
    }

    pub fn num_classes(&self) -> usize {
        match &self.target {
            Target::Classes { labels, .. } => labels.len(),
            Target::Real(_) => 0,
        }
    }

    /// Copy with columns reordered so that new column `k` is old column `order[k]`.
    pub fn permute_features(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                actual: order.len(),
            });
        }
        let mut x = Vec::with_capacity(self.x.len());
        for i in 0..self.n {
            x.extend(order.iter().map(|&j| self.value(i, j)));
        }
        let names = order.iter().map(|&j| self.feature_names[j].clone()).collect();
        Self::new(x, self.n, self.p, self.target.clone(), names)
    }

    pub fn with_target(&self, target: Target) -> Result<Self> {
        Self::new(self.x.clone(), self.n, self.p, target, self.feature_names.clone())
    }
}

/// One SPSA iteration as recorded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub y_plus: f64,
    pub y_minus: f64,
    pub gain_used: f64,
    pub mask_plus: FeatureMask,
    pub mask_minus: FeatureMask,
    pub running_best_loss: f64,
    /// Iterate after this iteration's update.
    pub weights: WeightVector,
}

/// Result of an SPSA run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub best_mask: FeatureMask,
    pub best_loss: f64,
    pub final_weights: WeightVector,
    pub final_mask: FeatureMask,
    pub iterations_run: usize,
    pub evaluations: usize,
    pub wall_time: f64,
}

impl RunTrace {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &RunTrace) -> bool {
        self.records == other.records
            && self.best_mask == other.best_mask
            && self.best_loss.to_bits() == other.best_loss.to_bits()
            && self.final_weights == other.final_weights
            && self.final_mask == other.final_mask
            && self.iterations_run == other.iterations_run
            && self.evaluations == other.evaluations
    }

    pub fn running_best(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.running_best_loss).collect()
    }
}
