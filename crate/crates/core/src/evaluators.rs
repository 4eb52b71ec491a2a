//! Cross-validated loss of a feature subset under a built-in model.
//!
//! Classification loss is the mean misclassification rate over folds.
//! Regression loss is `1 - R²` on the pooled out-of-fold predictions; it is
//! not clamped, so a model worse than the mean predictor gives a loss above 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossEvaluator;
use crate::seed::{derive_seed, SeededRng};
use crate::types::{Dataset, FeatureMask, TaskKind};

pub const GNB_VARIANCE_FLOOR: f64 = 1e-9;
pub const OLS_RIDGE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub shuffle_seed_base: u64,
    pub stratified: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            shuffle_seed_base: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Knn { k: usize },
    GaussianNb,
    Cart { max_depth: usize, min_leaf: usize },
    Ols,
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Knn { k } => format!("knn{k}"),
            ModelSpec::GaussianNb => "gnb".into(),
            ModelSpec::Cart { max_depth, .. } => format!("cart{max_depth}"),
            ModelSpec::Ols => "ols".into(),
        }
    }

    pub fn task_kind(&self) -> TaskKind {
        match self {
            ModelSpec::Ols => TaskKind::Regression,
            _ => TaskKind::Classification,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Knn { k: 0 } => Err(Error::invalid("knn k must be at least 1")),
            ModelSpec::Cart { max_depth: 0, .. } => Err(Error::invalid("cart max_depth must be at least 1")),
            ModelSpec::Cart { min_leaf: 0, .. } => Err(Error::invalid("cart min_leaf must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Dense row-major matrix of the selected columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Rows `index` restricted to the columns in `features`.
    pub fn select(dataset: &Dataset, index: &[usize], features: &[usize]) -> Self {
        let mut data = Vec::with_capacity(index.len() * features.len());
        for &i in index {
            let row = dataset.row(i);
            data.extend(features.iter().map(|&j| row[j]));
        }
        Self {
            rows: index.len(),
            cols: features.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn column_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.rows as f64;
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = vec![0.0; self.cols];
        for i in 0..self.rows {
            for ((s, v), m) in sd.iter_mut().zip(self.row(i)).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        sd.iter_mut().for_each(|s| {
            *s = (*s / n).sqrt();
            if *s <= 0.0 {
                *s = 1.0;
            }
        });
        (mean, sd)
    }

    fn standardized(&self, mean: &[f64], sd: &[f64]) -> Self {
        let mut data = self.data.clone();
        for chunk in data.chunks_mut(self.cols.max(1)) {
            for ((v, m), s) in chunk.iter_mut().zip(mean).zip(sd) {
                *v = (*v - m) / s;
            }
        }
        Self { data, ..*self }
    }
}

/// Standardizes both sides with the training columns' mean and deviation.
fn standardize_pair(train: &Matrix, test: &Matrix) -> (Matrix, Matrix) {
    let (mean, sd) = train.column_stats();
    (train.standardized(&mean, &sd), test.standardized(&mean, &sd))
}

fn argmax_lowest(counts: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

/// Majority vote among the `k` nearest training rows (Euclidean).
///
/// Distance ties go to the lower training index, vote ties to the smaller class code.
pub fn fit_predict_knn(train: &Matrix, labels: &[usize], test: &Matrix, k: usize, num_classes: usize) -> Result<Vec<usize>> {
    if train.rows() == 0 {
        return Err(Error::invalid("knn needs a non-empty training set"));
    }
    if k == 0 {
        return Err(Error::invalid("knn k must be at least 1"));
    }
    let k = k.min(train.rows());
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(train.rows());
    let mut votes = vec![0.0; num_classes];
    Ok((0..test.rows())
        .map(|t| {
            let x = test.row(t);
            dist.clear();
            dist.extend((0..train.rows()).map(|i| {
                let d: f64 = train.row(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            }));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            votes.iter_mut().for_each(|v| *v = 0.0);
            for &(_, i) in &dist[..k] {
                votes[labels[i]] += 1.0;
            }
            argmax_lowest(&votes)
        })
        .collect())
}

/// Gaussian naive Bayes with a per-feature variance floor.
pub fn fit_predict_gnb(train: &Matrix, labels: &[usize], test: &Matrix, num_classes: usize) -> Result<Vec<usize>> {
    if train.rows() == 0 {
        return Err(Error::invalid("naive Bayes needs a non-empty training set"));
    }
    let q = train.cols();
    let mut count = vec![0usize; num_classes];
    let mut mean = vec![vec![0.0; q]; num_classes];
    for i in 0..train.rows() {
        let c = labels[i];
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(train.row(i)) {
            *m += v;
        }
    }
    for c in 0..num_classes {
        if count[c] > 0 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
    }
    let mut var = vec![vec![0.0; q]; num_classes];
    for i in 0..train.rows() {
        let c = labels[i];
        for ((s, v), m) in var[c].iter_mut().zip(train.row(i)).zip(&mean[c]) {
            *s += (v - m).powi(2);
        }
    }
    for c in 0..num_classes {
        for s in var[c].iter_mut() {
            *s = if count[c] > 0 { *s / count[c] as f64 } else { 0.0 };
            *s = s.max(GNB_VARIANCE_FLOOR);
        }
    }
    let n = train.rows() as f64;
    let log_prior: Vec<f64> = count.iter().map(|&k| (k as f64 / n).ln()).collect();
    Ok((0..test.rows())
        .map(|t| {
            let x = test.row(t);
            let mut best: Option<(usize, f64)> = None;
            for c in (0..num_classes).filter(|&c| count[c] > 0) {
                let ll: f64 = x
                    .iter()
                    .zip(&mean[c])
                    .zip(&var[c])
                    .map(|((v, m), s)| -0.5 * (std::f64::consts::TAU * s).ln() - (v - m).powi(2) / (2.0 * s))
                    .sum::<f64>()
                    + log_prior[c];
                if best.is_none_or(|(_, b)| ll > b) {
                    best = Some((c, ll));
                }
            }
            best.map(|(c, _)| c).unwrap_or(0)
        })
        .collect())
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[f64]) -> usize {
        match self {
            Node::Leaf(c) => *c,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

struct CartBuilder<'a> {
    x: &'a Matrix,
    labels: &'a [usize],
    num_classes: usize,
    max_depth: usize,
    min_leaf: usize,
}

impl CartBuilder<'_> {
    fn counts(&self, index: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &i in index {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    fn build(&self, index: &[usize], depth: usize) -> Node {
        let counts = self.counts(index);
        let majority = argmax_lowest(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || index.len() < 2 * self.min_leaf {
            return Node::Leaf(majority);
        }
        match self.best_split(index, &counts) {
            Some((feature, threshold)) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    index.iter().partition(|&&i| self.x.row(i)[feature] <= threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(&left, depth + 1)),
                    right: Box::new(self.build(&right, depth + 1)),
                }
            }
            None => Node::Leaf(majority),
        }
    }

    /// Largest Gini decrease; ties keep the lower feature, then the lower threshold.
    fn best_split(&self, index: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        let n = index.len();
        let parent = gini(counts, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = index.to_vec();
        for f in 0..self.x.cols() {
            sorted.sort_by(|&a, &b| self.x.row(a)[f].total_cmp(&self.x.row(b)[f]).then(a.cmp(&b)));
            let mut left = vec![0usize; self.num_classes];
            let mut right = counts.to_vec();
            for pos in 0..n - 1 {
                let c = self.labels[sorted[pos]];
                left[c] += 1;
                right[c] -= 1;
                let (lo, hi) = (self.x.row(sorted[pos])[f], self.x.row(sorted[pos + 1])[f]);
                let n_left = pos + 1;
                if lo == hi || n_left < self.min_leaf || n - n_left < self.min_leaf {
                    continue;
                }
                let weighted = (n_left as f64 * gini(&left, n_left) + (n - n_left) as f64 * gini(&right, n - n_left)) / n as f64;
                let gain = parent - weighted;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, 0.5 * (lo + hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Fitted classification tree.
#[derive(Debug, Clone)]
pub struct CartTree {
    root: Node,
}

impl CartTree {
    pub fn fit(train: &Matrix, labels: &[usize], num_classes: usize, max_depth: usize, min_leaf: usize) -> Result<Self> {
        if max_depth == 0 {
            return Err(Error::invalid("cart max_depth must be at least 1"));
        }
        if train.rows() == 0 {
            return Err(Error::invalid("cart needs a non-empty training set"));
        }
        let builder = CartBuilder {
            x: train,
            labels,
            num_classes,
            max_depth,
            min_leaf: min_leaf.max(1),
        };
        let index: Vec<usize> = (0..train.rows()).collect();
        Ok(Self {
            root: builder.build(&index, 0),
        })
    }

    pub fn predict(&self, test: &Matrix) -> Vec<usize> {
        (0..test.rows()).map(|t| self.root.predict(test.row(t))).collect()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Gini-split classification tree; impure nodes split even at zero gain.
pub fn fit_predict_cart(
    train: &Matrix,
    labels: &[usize],
    test: &Matrix,
    num_classes: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Result<Vec<usize>> {
    Ok(CartTree::fit(train, labels, num_classes, max_depth, min_leaf)?.predict(test))
}

/// Least squares with intercept on standardized columns.
///
/// The normal equations are solved by Cholesky; when a pivot collapses the
/// diagonal gets [`OLS_RIDGE_JITTER`] added and the solve is repeated.
pub fn fit_predict_ols(train: &Matrix, y: &[f64], test: &Matrix) -> Result<Vec<f64>> {
    if train.rows() == 0 {
        return Err(Error::invalid("ols needs a non-empty training set"));
    }
    let (xs, ts) = standardize_pair(train, test);
    let q = xs.cols();
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    if q == 0 {
        return Ok(vec![y_mean; test.rows()]);
    }
    let x = DMatrix::from_row_slice(xs.rows(), q, &xs.data);
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
    let gram = x.transpose() * &x;
    let rhs = x.transpose() * yc;
    let max_diag = gram.diagonal().iter().copied().fold(0.0, f64::max).max(1.0);
    let solve = |g: DMatrix<f64>| -> Option<DVector<f64>> {
        let chol = g.cholesky()?;
        let l = chol.l();
        let min_pivot = l.diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
        (min_pivot > 1e-10 * max_diag).then(|| chol.solve(&rhs))
    };
    let beta = match solve(gram.clone()) {
        Some(b) => b,
        None => {
            let jittered = &gram + DMatrix::identity(q, q) * OLS_RIDGE_JITTER;
            match jittered.clone().cholesky() {
                Some(chol) => chol.solve(&rhs),
                None => jittered
                    .svd(true, true)
                    .solve(&rhs, 1e-12)
                    .map_err(|e| Error::invalid(format!("ols solve failed: {e}")))?,
            }
        }
    };
    Ok((0..ts.rows())
        .map(|t| y_mean + ts.row(t).iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

/// `1 - SS_res / SS_tot`, defined as 0 when the response is constant.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> f64 {
    let n = actual.len() as f64;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return 0.0;
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(y, f)| (y - f).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// In-sample R² of OLS on the selected features (no folds).
pub fn training_r_squared(dataset: &Dataset, mask: &FeatureMask) -> Result<f64> {
    let y = match dataset.task_kind() {
        TaskKind::Regression => dataset.target().as_numeric(),
        TaskKind::Classification => return Err(incompatible(&ModelSpec::Ols, TaskKind::Classification)),
    };
    let all: Vec<usize> = (0..dataset.n()).collect();
    let x = Matrix::select(dataset, &all, &mask.indices());
    let fitted = fit_predict_ols(&x, &y, &x)?;
    Ok(r_squared(&y, &fitted))
}

fn incompatible(model: &ModelSpec, task: TaskKind) -> Error {
    Error::IncompatibleModel {
        model: model.name(),
        task: task.to_string(),
    }
}

/// Fold index of every row; a pure function of `(seed, n, folds)` and, when
/// stratified, the class codes.
pub fn fold_assignment(n: usize, folds: usize, seed: u64, strata: Option<&[usize]>) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::invalid(format!("{folds} folds exceed {n} observations")));
    }
    let mut rng = SeededRng::new(seed);
    let mut assignment = vec![0usize; n];
    let groups: Vec<Vec<usize>> = match strata {
        Some(codes) => {
            let k = codes.iter().copied().max().map_or(0, |m| m + 1);
            let mut groups = vec![Vec::new(); k];
            for (i, &c) in codes.iter().enumerate() {
                groups[c].push(i);
            }
            groups
        }
        None => vec![(0..n).collect()],
    };
    let mut next = 0;
    for mut group in groups {
        rng.shuffle(&mut group);
        for i in group {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

/// Cross-validated loss of `mask` under `model`.
pub fn cv_loss(dataset: &Dataset, mask: &FeatureMask, model: &ModelSpec, cv: &CvConfig, noise_seed: u64) -> Result<f64> {
    if mask.len() != dataset.p() {
        return Err(Error::DimensionMismatch {
            expected: dataset.p(),
            actual: mask.len(),
        });
    }
    if mask.none_selected() {
        return Err(Error::EmptyMask);
    }
    model.validate()?;
    if model.task_kind() != dataset.task_kind() {
        return Err(incompatible(model, dataset.task_kind()));
    }
    let n = dataset.n();
    let strata = if cv.stratified { dataset.class_codes() } else { None };
    let fold_seed = derive_seed(cv.shuffle_seed_base, "folds", noise_seed);
    let assignment = fold_assignment(n, cv.folds, fold_seed, strata)?;
    let features = mask.indices();

    let mut error_rates = Vec::with_capacity(cv.folds);
    let mut pooled = vec![0.0; n];
    for fold in 0..cv.folds {
        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == fold);
        let train = Matrix::select(dataset, &train_idx, &features);
        let test = Matrix::select(dataset, &test_idx, &features);
        match (model, dataset.class_codes()) {
            (ModelSpec::Ols, None) => {
                let y = dataset.target().as_numeric();
                let y_train: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
                let fitted = fit_predict_ols(&train, &y_train, &test)?;
                for (&i, f) in test_idx.iter().zip(fitted) {
                    pooled[i] = f;
                }
            }
            (_, Some(codes)) => {
                let k = dataset.num_classes();
                let y_train: Vec<usize> = train_idx.iter().map(|&i| codes[i]).collect();
                let predicted = match *model {
                    ModelSpec::Knn { k: neighbours } => {
                        let (tr, te) = standardize_pair(&train, &test);
                        fit_predict_knn(&tr, &y_train, &te, neighbours, k)?
                    }
                    ModelSpec::GaussianNb => fit_predict_gnb(&train, &y_train, &test, k)?,
                    ModelSpec::Cart { max_depth, min_leaf } => {
                        fit_predict_cart(&train, &y_train, &test, k, max_depth, min_leaf)?
                    }
                    ModelSpec::Ols => unreachable!("checked above"),
                };
                let wrong = test_idx.iter().zip(&predicted).filter(|(&i, &c)| codes[i] != c).count();
                error_rates.push(wrong as f64 / test_idx.len() as f64);
            }
            _ => return Err(incompatible(model, dataset.task_kind())),
        }
    }
    match dataset.task_kind() {
        TaskKind::Classification => Ok(error_rates.iter().sum::<f64>() / error_rates.len() as f64),
        TaskKind::Regression => Ok(1.0 - r_squared(&dataset.target().as_numeric(), &pooled)),
    }
}

/// [`cv_loss`] bound to a dataset, model and fold configuration.
#[derive(Debug, Clone, Copy)]
pub struct CvEvaluator<'a> {
    pub dataset: &'a Dataset,
    pub model: ModelSpec,
    pub cv: CvConfig,
}

impl<'a> CvEvaluator<'a> {
    pub fn new(dataset: &'a Dataset, model: ModelSpec, cv: CvConfig) -> Result<Self> {
        model.validate()?;
        if model.task_kind() != dataset.task_kind() {
            return Err(incompatible(&model, dataset.task_kind()));
        }
        fold_assignment(dataset.n(), cv.folds, 0, None)?;
        Ok(Self { dataset, model, cv })
    }
}

impl LossEvaluator for CvEvaluator<'_> {
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64> {
        cv_loss(self.dataset, mask, &self.model, &self.cv, noise_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Target;

    fn classes(codes: &[usize]) -> Target {
        let k = codes.iter().max().unwrap() + 1;
        Target::Classes {
            codes: codes.to_vec(),
            labels: (0..k).map(|c| c.to_string()).collect(),
        }
    }

    fn two_clusters() -> Dataset {
        let mut rows = Vec::new();
        let mut codes = Vec::new();
        let mut rng = SeededRng::new(1);
        for i in 0..40 {
            let c = i % 2;
            let centre = if c == 0 { -100.0 } else { 100.0 };
            rows.push(vec![centre + rng.normal(), centre + rng.normal()]);
            codes.push(c);
        }
        Dataset::from_rows(&rows, classes(&codes)).unwrap()
    }

    #[test]
    fn separable_clusters_have_zero_knn_loss() {
        let d = two_clusters();
        for folds in [2, 5, 10] {
            let cv = CvConfig { folds, ..Default::default() };
            let loss = cv_loss(&d, &FeatureMask::full(2), &ModelSpec::Knn { k: 1 }, &cv, 3).unwrap();
            assert_eq!(loss, 0.0);
        }
    }

    #[test]
    fn exact_linear_regression_has_zero_loss() {
        let mut rng = SeededRng::new(2);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.normal(), rng.normal(), rng.normal()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - 2.0 * r[2] + 0.5).collect();
        let d = Dataset::from_rows(&rows, Target::Real(y)).unwrap();
        let mask = FeatureMask::from_binary(&[1, 0, 1]);
        let loss = cv_loss(&d, &mask, &ModelSpec::Ols, &CvConfig::default(), 9).unwrap();
        assert!(loss.abs() <= 1e-9, "loss {loss}");
    }

    #[test]
    fn empty_mask_and_incompatible_model_rejected() {
        let d = two_clusters();
        assert!(matches!(
            cv_loss(&d, &FeatureMask::empty(2), &ModelSpec::GaussianNb, &CvConfig::default(), 0),
            Err(Error::EmptyMask)
        ));
        assert!(matches!(
            cv_loss(&d, &FeatureMask::full(2), &ModelSpec::Ols, &CvConfig::default(), 0),
            Err(Error::IncompatibleModel { .. })
        ));
        let cv = CvConfig { folds: 41, ..Default::default() };
        assert!(cv_loss(&d, &FeatureMask::full(2), &ModelSpec::GaussianNb, &cv, 0).is_err());
    }

    #[test]
    fn knn_rules() {
        let train = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let labels = [0, 0, 1];
        let test = Matrix::from_rows(&[vec![1.6], vec![2.0]]);
        assert_eq!(fit_predict_knn(&train, &labels, &test, 3, 2).unwrap(), vec![0, 0]);
        assert_eq!(fit_predict_knn(&train, &labels, &test, 1, 2).unwrap(), vec![1, 1]);
        // balanced global vote ties to the smaller code
        let train = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let got = fit_predict_knn(&train, &[1, 0, 1, 0], &Matrix::from_rows(&[vec![9.0], vec![-4.0]]), 4, 2).unwrap();
        assert_eq!(got, vec![0, 0]);
        // equidistant neighbours: lower training index wins
        let train = Matrix::from_rows(&[vec![-1.0], vec![1.0]]);
        assert_eq!(fit_predict_knn(&train, &[1, 0], &Matrix::from_rows(&[vec![0.0]]), 1, 2).unwrap(), vec![1]);
        assert!(fit_predict_knn(&Matrix::from_rows(&[]), &[], &test, 1, 2).is_err());
    }

    #[test]
    fn gnb_rules() {
        let train = Matrix::from_rows(&[vec![0.0], vec![0.2], vec![10.0], vec![10.2]]);
        let labels = [0, 0, 1, 1];
        let got = fit_predict_gnb(&train, &labels, &Matrix::from_rows(&[vec![0.1], vec![10.1]]), 2).unwrap();
        assert_eq!(got, vec![0, 1]);
        let got = fit_predict_gnb(&train, &[1, 1, 1, 1], &Matrix::from_rows(&[vec![0.1], vec![-50.0]]), 2).unwrap();
        assert_eq!(got, vec![1, 1]);
        // identical likelihoods, priors 3:1 -> majority
        let train = Matrix::from_rows(&[vec![0.0], vec![0.0], vec![0.0], vec![0.0]]);
        let got = fit_predict_gnb(&train, &[1, 0, 1, 1], &Matrix::from_rows(&[vec![0.0]]), 2).unwrap();
        assert_eq!(got, vec![1]);
    }

    #[test]
    fn cart_rules() {
        let train = Matrix::from_rows(&[vec![5.0, 0.0], vec![1.0, 0.0], vec![2.0, 1.0], vec![6.0, 1.0]]);
        let labels = [1, 0, 0, 1];
        let tree = CartTree::fit(&train, &labels, 2, 3, 1).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict(&train), labels.to_vec());
        let tree = CartTree::fit(&train, &[1, 1, 1, 1], 2, 3, 1).unwrap();
        assert_eq!(tree.depth(), 0);

        let xor = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        let xor_labels = [0, 1, 1, 0];
        let errors = |depth| {
            fit_predict_cart(&xor, &xor_labels, &xor, 2, depth, 1)
                .unwrap()
                .iter()
                .zip(&xor_labels)
                .filter(|(a, b)| a != b)
                .count()
        };
        assert_eq!(errors(2), 0);
        assert!(errors(1) >= 1);
    }

    #[test]
    fn xor_depth_one_lower_bound_by_enumeration() {
        // every axis-aligned stump on the 4-point XOR misclassifies at least 2 points
        let pts = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
        for f in 0..2 {
            for left_class in 0..2 {
                for right_class in 0..2 {
                    let wrong = pts
                        .iter()
                        .filter(|(x, y)| (if x[f] <= 0.5 { left_class } else { right_class }) != *y)
                        .count();
                    assert!(wrong >= 2);
                }
            }
        }
    }

    #[test]
    fn ols_rules() {
        let train = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let test = Matrix::from_rows(&[vec![10.0], vec![-1.0]]);
        let got = fit_predict_ols(&train, &y, &test).unwrap();
        assert!((got[0] - 21.0).abs() < 1e-9 && (got[1] + 1.0).abs() < 1e-9);
        assert!((r_squared(&y, &fit_predict_ols(&train, &y, &train).unwrap()) - 1.0).abs() < 1e-12);
        assert_eq!(r_squared(&y, &[4.0; 4]), 0.0);
        assert_eq!(r_squared(&[2.0, 2.0], &[1.0, 3.0]), 0.0);
    }

    #[test]
    fn ols_duplicated_columns_match_single_copy() {
        let xs = [0.3, -1.2, 2.2, 0.7, -0.4, 1.9];
        let y = [1.0, -0.5, 2.5, 0.1, 0.4, 3.0];
        let single = Matrix::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        let double = Matrix::from_rows(&xs.iter().map(|&v| vec![v, v]).collect::<Vec<_>>());
        let a = fit_predict_ols(&single, &y, &single).unwrap();
        let b = fit_predict_ols(&double, &y, &double).unwrap();
        // pseudo-inverse oracle for the single-column design: slope = cov / var
        let mx = xs.iter().sum::<f64>() / 6.0;
        let my = y.iter().sum::<f64>() / 6.0;
        let slope = xs.iter().zip(&y).map(|(x, v)| (x - mx) * (v - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        for i in 0..6 {
            let oracle = my + slope * (xs[i] - mx);
            assert!((a[i] - oracle).abs() < 1e-9);
            assert!((b[i] - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn folds_partition_rows_and_respect_strata() {
        let codes: Vec<usize> = (0..53).map(|i| usize::from(i % 3 == 0)).collect();
        let a = fold_assignment(53, 5, 8, Some(&codes)).unwrap();
        assert_eq!(a, fold_assignment(53, 5, 8, Some(&codes)).unwrap());
        for class in 0..2 {
            let total = codes.iter().filter(|&&c| c == class).count() as f64;
            for f in 0..5 {
                let in_fold = (0..53).filter(|&i| a[i] == f && codes[i] == class).count() as f64;
                assert!((in_fold - total / 5.0).abs() <= 1.0);
            }
        }
        let plain = fold_assignment(10, 3, 1, None).unwrap();
        let mut sizes = [0; 3];
        plain.iter().for_each(|&f| sizes[f] += 1);
        assert_eq!(sizes.iter().sum::<usize>(), 10);
        assert!(fold_assignment(3, 4, 0, None).is_err());
        assert!(fold_assignment(3, 1, 0, None).is_err());
    }

    #[test]
    fn loss_is_invariant_to_feature_permutation() {
        let mut rng = SeededRng::new(4);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.normal()).collect()).collect();
        let codes: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + 0.5 * r[2] > 0.0)).collect();
        let d = Dataset::from_rows(&rows, classes(&codes)).unwrap();
        let order = [2, 0, 3, 1];
        let q = d.permute_features(&order).unwrap();
        let mask = FeatureMask::from_binary(&[1, 0, 1, 1]);
        let permuted = FeatureMask::new(order.iter().map(|&j| mask.get(j)).collect());
        for model in [ModelSpec::Knn { k: 3 }, ModelSpec::GaussianNb] {
            let a = cv_loss(&d, &mask, &model, &CvConfig::default(), 5).unwrap();
            let b = cv_loss(&q, &permuted, &model, &CvConfig::default(), 5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_class_training_fold_predicts_it() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(&rows, classes(&[0, 0, 0, 0, 0, 1])).unwrap();
        let cv = CvConfig { folds: 2, stratified: true, ..Default::default() };
        for model in [ModelSpec::Knn { k: 1 }, ModelSpec::GaussianNb, ModelSpec::Cart { max_depth: 3, min_leaf: 1 }] {
            let loss = cv_loss(&d, &FeatureMask::full(1), &model, &cv, 1).unwrap();
            assert!((0.0..=1.0).contains(&loss));
        }
    }
}
