//! Comparison methods: sequential wrapper searches, filter rankers and an
//! exhaustive oracle for small `p`.
//!
//! Every wrapper search charges one budget unit per `evaluate` call and uses
//! a single noise seed for all of its evaluations. The empty subset is never
//! evaluated; it costs [`LossEvaluator::empty_loss`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossEvaluator;
use crate::seed::SeededRng;
use crate::types::{Dataset, FeatureMask, TaskKind};

pub const EXHAUSTIVE_MAX_P: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    pub max_evaluations: usize,
    pub target_subset_size: Option<usize>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_evaluations: 100_000,
            target_subset_size: None,
        }
    }
}

impl SearchBudget {
    pub fn evaluations(max_evaluations: usize) -> Self {
        Self {
            max_evaluations,
            target_subset_size: None,
        }
    }

    pub fn with_target(mut self, size: usize) -> Self {
        self.target_subset_size = Some(size);
        self
    }

    fn validate(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::invalid("search needs at least one feature"));
        }
        if self.max_evaluations == 0 {
            return Err(Error::invalid("max_evaluations must be at least 1"));
        }
        match self.target_subset_size {
            Some(t) if t == 0 || t > p => Err(Error::invalid(format!("target_subset_size {t} outside 1..={p}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Add,
    Remove,
    ConditionalAdd,
    ConditionalRemove,
}

/// One accepted move of a sequential search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub kind: StepKind,
    pub feature: usize,
    pub mask: FeatureMask,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub mask: FeatureMask,
    pub loss: f64,
    pub evaluations: usize,
    pub truncated: bool,
    pub steps: Vec<SearchStep>,
}

/// Evaluation bookkeeping shared by the sequential searches.
struct Search<'e, E: ?Sized> {
    evaluator: &'e E,
    noise_seed: u64,
    budget: usize,
    evaluations: usize,
    truncated: bool,
    /// Lowest loss seen on a non-empty mask; ties keep fewer features, then the earlier one.
    best: Option<(FeatureMask, f64)>,
}

impl<'e, E: LossEvaluator + ?Sized> Search<'e, E> {
    fn new(evaluator: &'e E, noise_seed: u64, budget: usize) -> Self {
        Self {
            evaluator,
            noise_seed,
            budget,
            evaluations: 0,
            truncated: false,
            best: None,
        }
    }

    fn offer(&mut self, mask: &FeatureMask, loss: f64) {
        let better = match &self.best {
            None => true,
            Some((m, l)) => loss < *l || (loss == *l && mask.count() < m.count()),
        };
        if better && !mask.none_selected() {
            self.best = Some((mask.clone(), loss));
        }
    }

    /// Losses of `candidates` in order, cut short when the budget runs out.
    fn evaluate_all(&mut self, candidates: &[FeatureMask]) -> Result<Vec<f64>> {
        let allowed = candidates.len().min(self.budget - self.evaluations);
        if allowed < candidates.len() {
            self.truncated = true;
        }
        let losses: Vec<f64> = candidates[..allowed]
            .par_iter()
            .map(|m| self.evaluator.evaluate(m, self.noise_seed))
            .collect::<Result<_>>()?;
        self.evaluations += allowed;
        for (m, &l) in candidates.iter().zip(&losses) {
            self.offer(m, l);
        }
        Ok(losses)
    }

    fn evaluate_one(&mut self, mask: &FeatureMask) -> Result<Option<f64>> {
        Ok(self.evaluate_all(std::slice::from_ref(mask))?.pop())
    }

    /// Best single toggle of `mask` over `features`; ties go to the lower index.
    /// `None` when nothing could be evaluated or the step was cut short.
    fn best_toggle(&mut self, mask: &FeatureMask, features: &[usize], select: bool) -> Result<Option<(usize, FeatureMask, f64)>> {
        if features.is_empty() {
            return Ok(None);
        }
        let candidates: Vec<FeatureMask> = features.iter().map(|&j| mask.with(j, select)).collect();
        let losses = self.evaluate_all(&candidates)?;
        if losses.len() < candidates.len() {
            return Ok(None);
        }
        let mut best = 0;
        for (i, &l) in losses.iter().enumerate() {
            if l < losses[best] {
                best = i;
            }
        }
        Ok(Some((features[best], candidates[best].clone(), losses[best])))
    }

    /// Whether the search must stop for lack of budget; stopping for that reason marks it truncated.
    fn exhausted(&mut self) -> bool {
        if self.evaluations >= self.budget {
            self.truncated = true;
        }
        self.truncated
    }

    fn finish(self, mask: FeatureMask, loss: f64, steps: Vec<SearchStep>) -> SearchOutcome {
        let (mask, loss) = if self.truncated || mask.none_selected() {
            match self.best {
                Some((m, l)) => (m, l),
                None => (mask, loss),
            }
        } else {
            (mask, loss)
        };
        SearchOutcome {
            mask,
            loss,
            evaluations: self.evaluations,
            truncated: self.truncated,
            steps,
        }
    }
}

fn unselected(mask: &FeatureMask) -> Vec<usize> {
    (0..mask.len()).filter(|&j| !mask.get(j)).collect()
}

/// Greedy forward selection from the empty set.
pub fn sfs<E: LossEvaluator + ?Sized>(evaluator: &E, p: usize, budget: &SearchBudget, noise_seed: u64) -> Result<SearchOutcome> {
    budget.validate(p)?;
    let mut search = Search::new(evaluator, noise_seed, budget.max_evaluations);
    let mut mask = FeatureMask::empty(p);
    let mut loss = evaluator.empty_loss();
    let mut steps = Vec::new();
    while mask.count() < budget.target_subset_size.unwrap_or(p) && !search.exhausted() {
        let Some((j, next, l)) = search.best_toggle(&mask, &unselected(&mask), true)? else {
            break;
        };
        let forced = budget.target_subset_size.is_some();
        if !(forced || l < loss) {
            break;
        }
        mask = next;
        loss = l;
        steps.push(SearchStep { kind: StepKind::Add, feature: j, mask: mask.clone(), loss });
    }
    if mask.none_selected() && !search.truncated {
        // nothing beat the empty set; fall back to the best single feature
        let best = search.best.clone().expect("p >= 1 singletons were evaluated");
        return Ok(search.finish(best.0, best.1, steps));
    }
    Ok(search.finish(mask, loss, steps))
}

/// Greedy backward elimination from the full set; never empties the mask.
pub fn sbs<E: LossEvaluator + ?Sized>(evaluator: &E, p: usize, budget: &SearchBudget, noise_seed: u64) -> Result<SearchOutcome> {
    budget.validate(p)?;
    let mut search = Search::new(evaluator, noise_seed, budget.max_evaluations);
    let mut mask = FeatureMask::full(p);
    let mut steps = Vec::new();
    let Some(mut loss) = search.evaluate_one(&mask)? else {
        unreachable!("budget holds at least one evaluation")
    };
    let floor = budget.target_subset_size.unwrap_or(1);
    while mask.count() > floor && !search.exhausted() {
        let Some((j, next, l)) = search.best_toggle(&mask, &mask.indices(), false)? else {
            break;
        };
        if !(budget.target_subset_size.is_some() || l < loss) {
            break;
        }
        mask = next;
        loss = l;
        steps.push(SearchStep { kind: StepKind::Remove, feature: j, mask: mask.clone(), loss });
    }
    Ok(search.finish(mask, loss, steps))
}

/// Best loss seen per subset size, for the floating searches' conditional steps.
struct SizeRecord(Vec<f64>);

impl SizeRecord {
    fn new(p: usize) -> Self {
        Self(vec![f64::INFINITY; p + 1])
    }

    fn improves(&mut self, mask: &FeatureMask, loss: f64) -> bool {
        let slot = &mut self.0[mask.count()];
        if loss < *slot {
            *slot = loss;
            true
        } else {
            false
        }
    }
}

/// Sequential forward floating selection.
///
/// After each addition, features are removed again while doing so strictly
/// improves the best loss known at the smaller size. The result is the best
/// subset visited.
pub fn sffs<E: LossEvaluator + ?Sized>(evaluator: &E, p: usize, budget: &SearchBudget, noise_seed: u64) -> Result<SearchOutcome> {
    floating(evaluator, p, budget, noise_seed, true)
}

/// Sequential backward floating selection, the mirror image of [`sffs`].
pub fn sfbs<E: LossEvaluator + ?Sized>(evaluator: &E, p: usize, budget: &SearchBudget, noise_seed: u64) -> Result<SearchOutcome> {
    floating(evaluator, p, budget, noise_seed, false)
}

fn floating<E: LossEvaluator + ?Sized>(
    evaluator: &E,
    p: usize,
    budget: &SearchBudget,
    noise_seed: u64,
    forward: bool,
) -> Result<SearchOutcome> {
    budget.validate(p)?;
    let mut search = Search::new(evaluator, noise_seed, budget.max_evaluations);
    let mut sizes = SizeRecord::new(p);
    let mut steps = Vec::new();
    let (mut mask, mut loss) = if forward {
        (FeatureMask::empty(p), evaluator.empty_loss())
    } else {
        let full = FeatureMask::full(p);
        let Some(l) = search.evaluate_one(&full)? else {
            unreachable!("budget holds at least one evaluation")
        };
        (full, l)
    };
    sizes.improves(&mask, loss);
    let target = budget.target_subset_size;
    // (main move, conditional move, selection flag for the main move)
    let (main, cond, select) = if forward {
        (StepKind::Add, StepKind::ConditionalRemove, true)
    } else {
        (StepKind::Remove, StepKind::ConditionalAdd, false)
    };
    let candidates = |m: &FeatureMask, select: bool| if select { unselected(m) } else { m.indices() };
    let main_open = |m: &FeatureMask| match (forward, target) {
        (true, t) => m.count() < t.unwrap_or(p),
        (false, t) => m.count() > t.unwrap_or(1),
    };
    // conditional moves never undo the step just taken nor cross the empty set
    let cond_open = |m: &FeatureMask| if forward { m.count() > 2 } else { m.count() + 1 < p };

    while main_open(&mask) && !search.exhausted() {
        let Some((j, next, l)) = search.best_toggle(&mask, &candidates(&mask, select), select)? else {
            break;
        };
        if !(target.is_some() || l < loss) {
            break;
        }
        mask = next;
        loss = l;
        sizes.improves(&mask, loss);
        steps.push(SearchStep { kind: main, feature: j, mask: mask.clone(), loss });
        let mut last = j;
        while cond_open(&mask) && !search.exhausted() {
            let pool: Vec<usize> = candidates(&mask, !select).into_iter().filter(|&f| f != last).collect();
            let Some((f, back, bl)) = search.best_toggle(&mask, &pool, !select)? else {
                break;
            };
            if !sizes.improves(&back, bl) {
                break;
            }
            mask = back;
            loss = bl;
            last = f;
            steps.push(SearchStep { kind: cond, feature: f, mask: mask.clone(), loss });
        }
    }
    if let Some(t) = target {
        if mask.count() == t || search.truncated {
            return Ok(search.finish(mask, loss, steps));
        }
    }
    let best = search.best.clone().expect("at least one subset was evaluated");
    let mut outcome = search.finish(best.0, best.1, steps);
    if !outcome.truncated && loss <= outcome.loss && mask.count() <= outcome.mask.count() && !mask.none_selected() {
        outcome.mask = mask;
        outcome.loss = loss;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveOutcome {
    pub mask: FeatureMask,
    pub loss: f64,
    pub evaluations: usize,
}

/// Evaluates all `2^p - 1` non-empty subsets at one noise seed.
///
/// Ties go to fewer features, then to the lexicographically smaller sorted
/// index list.
pub fn exhaustive_best<E: LossEvaluator + ?Sized>(evaluator: &E, p: usize, noise_seed: u64) -> Result<ExhaustiveOutcome> {
    if p == 0 {
        return Err(Error::invalid("exhaustive search needs at least one feature"));
    }
    if p > EXHAUSTIVE_MAX_P {
        return Err(Error::invalid(format!("exhaustive search limited to p <= {EXHAUSTIVE_MAX_P}, got {p}")));
    }
    let total = (1u64 << p) - 1;
    let results: Vec<(FeatureMask, f64)> = (1..=total)
        .into_par_iter()
        .map(|code| {
            let mask = FeatureMask::from_code(p, code);
            evaluator.evaluate(&mask, noise_seed).map(|l| (mask, l))
        })
        .collect::<Result<_>>()?;
    let (mask, loss) = results
        .into_iter()
        .min_by(|(ma, la), (mb, lb)| {
            la.total_cmp(lb)
                .then(ma.count().cmp(&mb.count()))
                .then_with(|| ma.indices().cmp(&mb.indices()))
        })
        .expect("p >= 1");
    Ok(ExhaustiveOutcome {
        mask,
        loss,
        evaluations: total as usize,
    })
}

/// Features ordered by descending score; ties keep the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub order: Vec<usize>,
    /// Score of each feature, indexed by feature.
    pub scores: Vec<f64>,
    /// Sampled instances whose class had no other member, so no nearest hit.
    #[serde(default)]
    pub hits_skipped: usize,
}

impl Ranking {
    fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self {
            order,
            scores,
            hits_skipped: 0,
        }
    }

    /// Mask of the `m` best features.
    pub fn top(&self, m: usize) -> Result<FeatureMask> {
        if m == 0 || m > self.order.len() {
            return Err(Error::invalid(format!("m = {m} outside 1..={}", self.order.len())));
        }
        FeatureMask::from_indices(self.order.len(), &self.order[..m])
    }
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Ranks features by `|r(X_j, y)|`; class codes serve as numeric labels.
pub fn rank_correlation(dataset: &Dataset) -> Ranking {
    let y = dataset.target().as_numeric();
    Ranking::from_scores((0..dataset.p()).map(|j| pearson(&dataset.column(j), &y).abs()).collect())
}

/// Kira–Rendell RELIEF over range-normalized features.
///
/// With `num_samples = None` every instance is used once in row order.
/// Otherwise that many distinct rows are drawn with `seed`. With more than two
/// classes the nearest miss is the nearest row of any other class.
pub fn rank_relief(dataset: &Dataset, num_samples: Option<usize>, seed: u64) -> Result<Ranking> {
    let Some(codes) = dataset.class_codes() else {
        return Err(Error::IncompatibleModel {
            model: "relief".into(),
            task: TaskKind::Regression.to_string(),
        });
    };
    let (n, p) = (dataset.n(), dataset.p());
    let range: Vec<f64> = (0..p)
        .map(|j| {
            let col = dataset.column(j);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    let diff = |a: usize, b: usize, j: usize| {
        if range[j] > 0.0 {
            (dataset.value(a, j) - dataset.value(b, j)).abs() / range[j]
        } else {
            0.0
        }
    };
    let sampled: Vec<usize> = match num_samples {
        None => (0..n).collect(),
        Some(m) if m == 0 || m > n => return Err(Error::invalid(format!("num_samples {m} outside 1..={n}"))),
        Some(m) => {
            let mut all: Vec<usize> = (0..n).collect();
            SeededRng::new(seed).shuffle(&mut all);
            all.truncate(m);
            all
        }
    };
    let mut weights = vec![0.0; p];
    let mut hits_skipped = 0;
    for &i in &sampled {
        let mut hit: Option<(f64, usize)> = None;
        let mut miss: Option<(f64, usize)> = None;
        for r in (0..n).filter(|&r| r != i) {
            let d: f64 = (0..p).map(|j| diff(i, r, j).powi(2)).sum();
            let slot = if codes[r] == codes[i] { &mut hit } else { &mut miss };
            if slot.is_none_or(|(best, _)| d < best) {
                *slot = Some((d, r));
            }
        }
        let miss = miss.expect("at least two classes").1;
        match hit {
            Some((_, h)) => {
                for (j, w) in weights.iter_mut().enumerate() {
                    *w += diff(i, miss, j) - diff(i, h, j);
                }
            }
            None => {
                hits_skipped += 1;
                for (j, w) in weights.iter_mut().enumerate() {
                    *w += diff(i, miss, j);
                }
            }
        }
    }
    let m = sampled.len() as f64;
    weights.iter_mut().for_each(|w| *w /= m);
    let mut ranking = Ranking::from_scores(weights);
    ranking.hits_skipped = hits_skipped;
    Ok(ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{CountingEvaluator, FnEvaluator};
    use crate::types::Target;

    fn additive(p: usize) -> impl LossEvaluator {
        // loss = 1 - 0.1 |S ∩ {2,5}| + 0.01 |S \ {2,5}|  (1-based features 2 and 5)
        FnEvaluator::new(move |m: &FeatureMask, _| {
            let good = [1, 4].iter().filter(|&&j| j < p && m.get(j)).count() as f64;
            let bad = m.count() as f64 - good;
            1.0 - 0.1 * good + 0.01 * bad
        })
    }

    #[test]
    fn sfs_on_additive_oracle() {
        let out = sfs(&additive(6), 6, &SearchBudget::default(), 0).unwrap();
        assert_eq!(out.mask.one_based(), vec![2, 5]);
        assert_eq!(out.steps.len(), 2);
        assert_eq!(out.steps[0].feature, 1);
        assert!((out.loss - 0.8).abs() < 1e-12);
        assert_eq!(out.evaluations, 6 + 5 + 4);
        assert!(!out.truncated);
    }

    #[test]
    fn sbs_on_additive_oracle() {
        let out = sbs(&additive(6), 6, &SearchBudget::default(), 0).unwrap();
        assert_eq!(out.mask.one_based(), vec![2, 5]);
        for w in out.steps.windows(2) {
            assert!(w[1].loss < w[0].loss);
        }
    }

    #[test]
    fn single_feature_cases() {
        let good = FnEvaluator::new(|_: &FeatureMask, _| 0.4);
        let bad = FnEvaluator::new(|_: &FeatureMask, _| 1.3);
        let b = SearchBudget::default();
        assert_eq!(sfs(&good, 1, &b, 0).unwrap().mask.one_based(), vec![1]);
        // the returned mask is never empty, even when nothing beats 1.0
        let out = sfs(&bad, 1, &b, 0).unwrap();
        assert_eq!(out.mask.one_based(), vec![1]);
        assert!(out.steps.is_empty());
        assert_eq!(sbs(&bad, 1, &b, 0).unwrap().mask.one_based(), vec![1]);
    }

    #[test]
    fn floating_without_improving_conditionals_matches_plain() {
        let e = additive(7);
        let b = SearchBudget::default();
        let plain = sfs(&e, 7, &b, 0).unwrap();
        let float = sffs(&e, 7, &b, 0).unwrap();
        assert_eq!(plain.mask, float.mask);
        assert_eq!(plain.steps, float.steps);
        let back = sfbs(&e, 7, &b, 0).unwrap();
        assert_eq!(back.mask.one_based(), vec![2, 5]);
    }

    #[test]
    fn budget_of_one_truncates() {
        let e = CountingEvaluator::new(additive(5));
        for f in [sfs, sffs] {
            let out = f(&e, 5, &SearchBudget::evaluations(1), 0).unwrap();
            assert!(out.truncated);
            assert_eq!(out.evaluations, 1);
            assert_eq!(out.mask.count(), 1);
        }
        assert_eq!(e.calls(), 2);
        let out = sfbs(&e, 5, &SearchBudget::evaluations(1), 0).unwrap();
        assert!(out.truncated && out.mask.count() == 5);
        assert!(sfs(&e, 5, &SearchBudget::evaluations(0), 0).is_err());
    }

    #[test]
    fn target_size_is_honoured() {
        let e = additive(6);
        let b = SearchBudget::default().with_target(4);
        for f in [sfs, sbs, sffs, sfbs] {
            let out = f(&e, 6, &b, 0).unwrap();
            assert_eq!(out.mask.count(), 4);
            assert!(out.mask.get(1) && out.mask.get(4));
        }
    }

    #[test]
    fn exhaustive_rules() {
        let e = CountingEvaluator::new(additive(3));
        let out = exhaustive_best(&e, 3, 0).unwrap();
        assert_eq!((out.evaluations, e.calls()), (7, 7));
        assert_eq!(exhaustive_best(&additive(6), 6, 0).unwrap().mask.one_based(), vec![2, 5]);
        let flat = FnEvaluator::new(|m: &FeatureMask, _| if m.get(1) || m.get(2) { 0.3 } else { 0.6 });
        assert_eq!(exhaustive_best(&flat, 4, 0).unwrap().mask.one_based(), vec![2]);
        assert!(exhaustive_best(&flat, 21, 0).is_err());
    }

    fn dataset(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset {
        Dataset::from_rows(rows, Target::Real(y)).unwrap()
    }

    #[test]
    fn correlation_rules() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 3.0, ((i * 7) % 5) as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let r = rank_correlation(&dataset(&rows, y));
        assert_eq!(r.order[0], 0);
        assert!((r.scores[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.scores[1], 0.0);
    }

    #[test]
    fn correlation_matches_covariance_formula() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0];
        let y = [2.0, 1.0, 5.0, 6.0, 9.0];
        // hand: mean x = 5, mean y = 4.6; Sxy = 50, Sxx = 66, Syy = 41.2
        let oracle = 50.0 / (66.0f64 * 41.2).sqrt();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let r = rank_correlation(&dataset(&rows, y.to_vec()));
        assert!((r.scores[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn relief_six_point_instance() {
        // feature 1 separates the classes, feature 2 is noise
        let rows = vec![
            vec![0.0, 1.0],
            vec![1.0, 4.0],
            vec![2.0, 2.0],
            vec![8.0, 3.0],
            vec![9.0, 0.0],
            vec![10.0, 4.0],
        ];
        let codes = vec![0, 0, 0, 1, 1, 1];
        let target = Target::Classes { codes, labels: vec!["a".into(), "b".into()] };
        let d = Dataset::from_rows(&rows, target).unwrap();
        let r = rank_relief(&d, None, 0).unwrap();
        assert_eq!(r.order, vec![0, 1]);
        // hits/misses worked by hand on the normalized grid (ranges 10 and 4):
        // row0 hit 2 miss 4, row1 hit 2 miss 3, row2 hit 0 miss 3,
        // row3 hit 5 miss 2, row4 hit 3 miss 2, row5 hit 3 miss 1
        let w1 = ((0.9 - 0.2) + (0.7 - 0.1) + (0.6 - 0.2) + (0.6 - 0.2) + (0.7 - 0.1) + (0.9 - 0.2)) / 6.0;
        let w2 = ((0.25 - 0.25) + (0.25 - 0.5) + (0.25 - 0.25) + (0.25 - 0.25) + (0.5 - 0.75) + (0.0 - 0.25)) / 6.0;
        assert!((r.scores[0] - w1).abs() < 1e-12, "{:?}", r.scores);
        assert!((r.scores[1] - w2).abs() < 1e-12, "{:?}", r.scores);
        assert_eq!(r, rank_relief(&d, None, 0).unwrap());
        assert_eq!(r.hits_skipped, 0);
    }

    #[test]
    fn relief_flags_singleton_class() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let target = Target::Classes { codes: vec![0, 0, 0, 1], labels: vec!["a".into(), "b".into()] };
        let r = rank_relief(&Dataset::from_rows(&rows, target).unwrap(), None, 0).unwrap();
        assert_eq!(r.hits_skipped, 1);
        assert!(rank_relief(&dataset(&rows, vec![0.0, 1.0, 2.0, 3.0]), None, 0).is_err());
    }
}
