//! The noisy loss contract shared by the SPSA engine and the baseline searches.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::Result;
use crate::types::FeatureMask;

/// Noisy measurement `y = L(mask) + noise` of a feature subset.
///
/// Implementations must be deterministic for a fixed `(mask, noise_seed)`
/// pair. Callers never pass an empty mask; they substitute
/// [`empty_loss`](Self::empty_loss) instead.
pub trait LossEvaluator: Sync {
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64>;

    /// Loss charged to the empty subset without calling `evaluate`.
    fn empty_loss(&self) -> f64 {
        1.0
    }
}

impl<E: LossEvaluator + ?Sized> LossEvaluator for &E {
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64> {
        (**self).evaluate(mask, noise_seed)
    }

    fn empty_loss(&self) -> f64 {
        (**self).empty_loss()
    }
}

/// Adapts a closure `(mask, seed) -> loss` into an evaluator.
pub struct FnEvaluator<F> {
    f: F,
}

impl<F> FnEvaluator<F>
where
    F: Fn(&FeatureMask, u64) -> f64 + Sync,
{
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F> LossEvaluator for FnEvaluator<F>
where
    F: Fn(&FeatureMask, u64) -> f64 + Sync,
{
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64> {
        Ok((self.f)(mask, noise_seed))
    }
}

/// Counts `evaluate` invocations of the wrapped evaluator.
pub struct CountingEvaluator<E> {
    inner: E,
    calls: AtomicUsize,
}

impl<E: LossEvaluator> CountingEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: LossEvaluator> LossEvaluator for CountingEvaluator<E> {
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(mask, noise_seed)
    }

    fn empty_loss(&self) -> f64 {
        self.inner.empty_loss()
    }
}

/// Caches losses by mask, ignoring the noise seed.
///
/// Only meaningful for evaluators whose loss does not depend on the seed:
/// with a noisy evaluator the first draw for each mask would be frozen.
pub struct MemoizedEvaluator<E> {
    inner: E,
    cache: Mutex<HashMap<FeatureMask, f64>>,
}

impl<E: LossEvaluator> MemoizedEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<E: LossEvaluator> LossEvaluator for MemoizedEvaluator<E> {
    fn evaluate(&self, mask: &FeatureMask, noise_seed: u64) -> Result<f64> {
        if let Some(&loss) = self.cache.lock().unwrap().get(mask) {
            return Ok(loss);
        }
        let loss = self.inner.evaluate(mask, noise_seed)?;
        self.cache.lock().unwrap().insert(mask.clone(), loss);
        Ok(loss)
    }

    fn empty_loss(&self) -> f64 {
        self.inner.empty_loss()
    }
}

/// Evaluates `mask`, charging the empty subset its fixed loss instead.
pub(crate) fn measure<E: LossEvaluator + ?Sized>(evaluator: &E, mask: &FeatureMask, noise_seed: u64) -> Result<(f64, bool)> {
    if mask.none_selected() {
        Ok((evaluator.empty_loss(), false))
    } else {
        evaluator.evaluate(mask, noise_seed).map(|y| (y, true))
    }
}
