//! Binary SPSA and its Barzilai–Borwein accelerated variant.
//!
//! Both optimizers keep a continuous iterate `w` and, each iteration, draw a
//! ±1 perturbation `delta`, evaluate the loss at the rounded points
//! `R(B(w ± c·delta))`, form the simultaneous-perturbation gradient and take a
//! step, projecting the new iterate back onto `[0, 1]^p`. [`run_bspsa`] uses the monotone gain `a / (A + k)^alpha`;
//! [`run_spsafs`] averages the gradient estimates and uses a clipped and
//! smoothed two-point (BB) gain instead.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::{BbVariant, GainState, GradientAveraging, MonotoneGainConfig};
use crate::loss::{measure, LossEvaluator};
use crate::seed::{derive_seed, SeededRng};
use crate::types::{FeatureMask, IterationRecord, PerturbationVector, RunTrace, WeightVector};

/// Supplies one perturbation vector per iteration.
pub trait PerturbationSource {
    fn draw(&mut self, p: usize) -> Result<PerturbationVector>;
}

/// Independent symmetric Bernoulli draws from a seeded stream.
#[derive(Debug, Clone)]
pub struct BernoulliPerturbations {
    rng: SeededRng,
}

impl BernoulliPerturbations {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SeededRng::new(seed),
        }
    }

    /// The stream an optimizer run with `run_seed` uses.
    pub fn for_run(run_seed: u64) -> Self {
        Self::new(derive_seed(run_seed, "delta", 0))
    }
}

impl PerturbationSource for BernoulliPerturbations {
    fn draw(&mut self, p: usize) -> Result<PerturbationVector> {
        Ok(PerturbationVector::sample(p, &mut self.rng))
    }
}

/// Replays a fixed list of perturbations, for worked examples and tests.
#[derive(Debug, Clone)]
pub struct ScriptedPerturbations {
    queue: VecDeque<PerturbationVector>,
}

impl ScriptedPerturbations {
    pub fn new(deltas: Vec<PerturbationVector>) -> Self {
        Self { queue: deltas.into() }
    }
}

impl PerturbationSource for ScriptedPerturbations {
    fn draw(&mut self, p: usize) -> Result<PerturbationVector> {
        let delta = self
            .queue
            .pop_front()
            .ok_or_else(|| Error::invalid("scripted perturbations exhausted"))?;
        if delta.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: delta.len(),
            });
        }
        Ok(delta)
    }
}

/// `(y_plus - y_minus) / (2c) * delta^-1`, component-wise.
pub fn simultaneous_gradient(y_plus: f64, y_minus: f64, c: f64, delta: &PerturbationVector) -> Vec<f64> {
    let scale = (y_plus - y_minus) / (2.0 * c);
    delta.as_slice().iter().map(|d| scale * (1.0 / d)).collect()
}

/// Gradient estimate for a loss defined directly on the continuous box,
/// with no bounding or rounding of the perturbed points.
pub fn estimate_gradient_continuous<F>(w: &[f64], delta: &PerturbationVector, c: f64, loss: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let plus: Vec<f64> = w.iter().zip(delta.as_slice()).map(|(x, d)| x + c * d).collect();
    let minus: Vec<f64> = w.iter().zip(delta.as_slice()).map(|(x, d)| x - c * d).collect();
    simultaneous_gradient(loss(&plus), loss(&minus), c, delta)
}

/// One binary gradient measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub y_plus: f64,
    pub y_minus: f64,
    pub mask_plus: FeatureMask,
    pub mask_minus: FeatureMask,
    /// How many of the two measurements actually called the evaluator.
    pub evaluations: usize,
}

/// Evaluates the loss at `R(B(w ± c·delta))` and forms the gradient estimate.
///
/// Both points share `noise_seed` unless they round to the same mask, in which
/// case the minus side uses a derived sub-seed so the difference is pure noise.
pub fn estimate_gradient<E: LossEvaluator + ?Sized>(
    w: &WeightVector,
    delta: &PerturbationVector,
    c: f64,
    evaluator: &E,
    noise_seed: u64,
) -> Result<GradientEstimate> {
    if w.len() != delta.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: delta.len(),
        });
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("perturbation size must be positive, got {c}")));
    }
    let mask_plus = w.perturbed(delta, c).bound().round_mask();
    let mask_minus = w.perturbed(delta, -c).bound().round_mask();
    let minus_seed = if mask_plus == mask_minus {
        derive_seed(noise_seed, "minus", 0)
    } else {
        noise_seed
    };
    let (y_plus, called_plus) = measure(evaluator, &mask_plus, noise_seed).map_err(|e| attach_mask(e, &mask_plus))?;
    let (y_minus, called_minus) =
        measure(evaluator, &mask_minus, minus_seed).map_err(|e| attach_mask(e, &mask_minus))?;
    Ok(GradientEstimate {
        gradient: simultaneous_gradient(y_plus, y_minus, c, delta),
        y_plus,
        y_minus,
        mask_plus,
        mask_minus,
        evaluations: usize::from(called_plus) + usize::from(called_minus),
    })
}

fn attach_mask(err: Error, mask: &FeatureMask) -> Error {
    match err {
        Error::Evaluation { .. } => err,
        other => Error::Evaluation {
            mask: mask.to_hex(),
            message: other.to_string(),
        },
    }
}

/// Settings for [`run_bspsa`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BspsaConfig {
    pub gain: MonotoneGainConfig,
    pub iterations: usize,
    pub seed: u64,
    /// Stop after this many iterations without a new best loss. Off by default.
    pub stall_tolerance: Option<usize>,
}

impl Default for BspsaConfig {
    fn default() -> Self {
        Self {
            gain: MonotoneGainConfig::default(),
            iterations: 300,
            seed: 0,
            stall_tolerance: None,
        }
    }
}

impl BspsaConfig {
    pub fn validate(&self) -> Result<()> {
        self.gain.validate()?;
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Settings for [`run_spsafs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaFsConfig {
    pub c: f64,
    pub iterations: usize,
    /// Maximum number of past gains averaged with the current one.
    pub smoothing_window: usize,
    pub gradient_averaging: GradientAveraging,
    /// `None` turns the BB gain off and every iteration uses the fallback schedule.
    /// Written as `"off"` in config files.
    #[serde(with = "bb_switch")]
    pub bb_variant: Option<BbVariant>,
    /// Schedule for the cold-start gain (and for every gain when BB is off).
    pub fallback_gain: MonotoneGainConfig,
    pub seed: u64,
    pub stall_tolerance: Option<usize>,
}

impl Default for SpsaFsConfig {
    fn default() -> Self {
        Self {
            c: 0.05,
            iterations: 300,
            smoothing_window: 2,
            gradient_averaging: GradientAveraging::AllHistory,
            bb_variant: Some(BbVariant::RatioGg),
            fallback_gain: MonotoneGainConfig::default(),
            seed: 0,
            stall_tolerance: None,
        }
    }
}

impl SpsaFsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("c must be positive, got {}", self.c)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        self.fallback_gain.validate()
    }

    /// The configuration under which SPSA-FS reduces to BSPSA.
    pub fn degenerate_to(bspsa: &BspsaConfig) -> Self {
        Self {
            c: bspsa.gain.c,
            iterations: bspsa.iterations,
            smoothing_window: 0,
            gradient_averaging: GradientAveraging::FixedWindow(0),
            bb_variant: None,
            fallback_gain: bspsa.gain,
            seed: bspsa.seed,
            stall_tolerance: bspsa.stall_tolerance,
        }
    }
}

mod bb_switch {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::gain::BbVariant;

    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "snake_case")]
    enum Switch {
        Off,
        RatioGg,
        RatioXx,
    }

    pub fn serialize<S: Serializer>(v: &Option<BbVariant>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => Switch::Off,
            Some(BbVariant::RatioGg) => Switch::RatioGg,
            Some(BbVariant::RatioXx) => Switch::RatioXx,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BbVariant>, D::Error> {
        Ok(match Switch::deserialize(d)? {
            Switch::Off => None,
            Switch::RatioGg => Some(BbVariant::RatioGg),
            Switch::RatioXx => Some(BbVariant::RatioXx),
        })
    }
}

fn check_start(w0: &WeightVector) -> Result<()> {
    if w0.is_empty() {
        return Err(Error::invalid("cannot optimize over zero features"));
    }
    if w0.as_slice().iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("initial weights must be finite"));
    }
    Ok(())
}

/// Running best plus stall bookkeeping shared by both loops.
struct Progress {
    best_loss: f64,
    best_mask: FeatureMask,
    since_improvement: usize,
    evaluations: usize,
}

impl Progress {
    fn new(p: usize) -> Self {
        Self {
            best_loss: f64::INFINITY,
            best_mask: FeatureMask::empty(p),
            since_improvement: 0,
            evaluations: 0,
        }
    }

    fn observe(&mut self, est: &GradientEstimate) {
        self.evaluations += est.evaluations;
        let before = self.best_loss;
        for (y, mask) in [(est.y_plus, &est.mask_plus), (est.y_minus, &est.mask_minus)] {
            if y < self.best_loss {
                self.best_loss = y;
                self.best_mask = mask.clone();
            }
        }
        if self.best_loss < before {
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
    }

    fn stalled(&self, tolerance: Option<usize>) -> bool {
        tolerance.is_some_and(|t| self.since_improvement >= t)
    }
}

fn record(k: usize, est: GradientEstimate, gain_used: f64, progress: &Progress, weights: &WeightVector) -> IterationRecord {
    IterationRecord {
        k,
        y_plus: est.y_plus,
        y_minus: est.y_minus,
        gain_used,
        mask_plus: est.mask_plus,
        mask_minus: est.mask_minus,
        running_best_loss: progress.best_loss,
        weights: weights.clone(),
    }
}

fn finish(records: Vec<IterationRecord>, progress: Progress, w: WeightVector, started: Instant) -> RunTrace {
    RunTrace {
        iterations_run: records.len(),
        records,
        best_mask: progress.best_mask,
        best_loss: progress.best_loss,
        final_mask: w.bound().round_mask(),
        final_weights: w,
        evaluations: progress.evaluations,
        wall_time: started.elapsed().as_secs_f64(),
    }
}

/// Binary SPSA with seeded Bernoulli perturbations.
pub fn run_bspsa<E: LossEvaluator + ?Sized>(evaluator: &E, w0: &WeightVector, cfg: &BspsaConfig) -> Result<RunTrace> {
    let mut source = BernoulliPerturbations::for_run(cfg.seed);
    run_bspsa_with(evaluator, w0, cfg, &mut source)
}

/// Binary SPSA drawing perturbations from `source`.
pub fn run_bspsa_with<E, S>(evaluator: &E, w0: &WeightVector, cfg: &BspsaConfig, source: &mut S) -> Result<RunTrace>
where
    E: LossEvaluator + ?Sized,
    S: PerturbationSource + ?Sized,
{
    cfg.validate()?;
    check_start(w0)?;
    let started = Instant::now();
    let p = w0.len();
    let c = cfg.gain.c;
    let mut w = w0.clone();
    let mut progress = Progress::new(p);
    let mut records = Vec::with_capacity(cfg.iterations);

    for k in 0..cfg.iterations {
        let delta = source.draw(p)?;
        let est = estimate_gradient(&w, &delta, c, evaluator, derive_seed(cfg.seed, "noise", k as u64))?;
        let gain = cfg.gain.gain(k);
        w = w.step(&est.gradient, gain).bound();
        progress.observe(&est);
        records.push(record(k, est, gain, &progress, &w));
        if progress.stalled(cfg.stall_tolerance) {
            break;
        }
    }
    Ok(finish(records, progress, w, started))
}

/// SPSA-FS with seeded Bernoulli perturbations.
pub fn run_spsafs<E: LossEvaluator + ?Sized>(evaluator: &E, w0: &WeightVector, cfg: &SpsaFsConfig) -> Result<RunTrace> {
    let mut source = BernoulliPerturbations::for_run(cfg.seed);
    run_spsafs_with(evaluator, w0, cfg, &mut source)
}

/// SPSA-FS drawing perturbations from `source`.
pub fn run_spsafs_with<E, S>(evaluator: &E, w0: &WeightVector, cfg: &SpsaFsConfig, source: &mut S) -> Result<RunTrace>
where
    E: LossEvaluator + ?Sized,
    S: PerturbationSource + ?Sized,
{
    cfg.validate()?;
    check_start(w0)?;
    let started = Instant::now();
    let p = w0.len();
    let mut w = w0.clone();
    let mut state = GainState::new();
    let mut progress = Progress::new(p);
    let mut records = Vec::with_capacity(cfg.iterations);

    for k in 0..cfg.iterations {
        let delta = source.draw(p)?;
        let est = estimate_gradient(&w, &delta, cfg.c, evaluator, derive_seed(cfg.seed, "noise", k as u64))?;
        let direction = state.average(&est.gradient, cfg.gradient_averaging);

        let accepted = match cfg.bb_variant {
            None => cfg.fallback_gain.gain(k),
            Some(variant) => match state.bb_gain(w.as_slice(), &direction, variant) {
                Some(raw) => state.clip(raw, cfg.fallback_gain.gain(k)),
                // no gradient difference yet
                None => cfg.fallback_gain.gain(k),
            },
        };
        let gain = state.smooth(accepted, cfg.smoothing_window);

        let next = w.step(&direction, gain).bound();
        state.record(w.into_inner(), est.gradient.clone(), direction, accepted);
        w = next;
        progress.observe(&est);
        records.push(record(k, est, gain, &progress, &w));
        if progress.stalled(cfg.stall_tolerance) {
            break;
        }
    }
    Ok(finish(records, progress, w, started))
}

/// Top `m` features (zero-based) by bounded final weight, ties to the lower index.
pub fn rank_features(weights: &WeightVector, m: usize) -> Result<Vec<usize>> {
    let p = weights.len();
    if m == 0 || m > p {
        return Err(Error::invalid(format!("m must be in 1..={p}, got {m}")));
    }
    let bounded = weights.bound();
    let w = bounded.as_slice();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| w[j].total_cmp(&w[i]).then(i.cmp(&j)));
    order.truncate(m);
    Ok(order)
}
