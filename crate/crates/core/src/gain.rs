//! Gain sequences: the monotone schedule and the Barzilai–Borwein gain with
//! clipping, smoothing and gradient averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominators smaller than this make the BB quotient degenerate.
pub const BB_DENOMINATOR_EPS: f64 = 1e-12;

/// Parameters of the monotone schedule `a_k = a / (A + k)^alpha` and the
/// perturbation size `c_k = c / gamma^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonotoneGainConfig {
    pub a: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub c: f64,
    pub gamma: f64,
}

impl Default for MonotoneGainConfig {
    fn default() -> Self {
        Self {
            a: 0.75,
            big_a: 100.0,
            alpha: 0.6,
            c: 0.05,
            gamma: 1.0,
        }
    }
}

impl MonotoneGainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::invalid(format!("gain a must be positive, got {}", self.a)));
        }
        if !(self.big_a >= 0.0 && self.big_a.is_finite()) {
            return Err(Error::invalid(format!("gain A must be nonnegative, got {}", self.big_a)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("gain alpha must be positive, got {}", self.alpha)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!("perturbation c must be positive, got {}", self.c)));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be at least 1, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn gain(&self, k: usize) -> f64 {
        monotone_gain(k, self)
    }

    /// Perturbation size at iteration `k`. Binary runs ignore `gamma` and use `c`.
    pub fn perturbation(&self, k: usize) -> f64 {
        self.c / self.gamma.powf(k as f64)
    }
}

/// `a / (A + k)^alpha`; when `A + k` is zero the base becomes `A + k + 1`.
pub fn monotone_gain(k: usize, cfg: &MonotoneGainConfig) -> f64 {
    let mut base = cfg.big_a + k as f64;
    if base <= 0.0 {
        base += 1.0;
    }
    cfg.a / base.powf(cfg.alpha)
}

/// Which least-squares form of the two-point step to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbVariant {
    /// `dwᵀdg / dgᵀdg`
    RatioGg,
    /// `dwᵀdw / dwᵀdg`
    RatioXx,
}

/// Raw BB quotient, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BbStep {
    Value(f64),
    Degenerate,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-point step from an iterate difference `dw` and gradient difference `dg`.
pub fn bb_gain(dw: &[f64], dg: &[f64], variant: BbVariant) -> BbStep {
    let (num, den) = match variant {
        BbVariant::RatioGg => (dot(dw, dg), dot(dg, dg)),
        BbVariant::RatioXx => (dot(dw, dw), dot(dw, dg)),
    };
    if !den.is_finite() || den.abs() < BB_DENOMINATOR_EPS {
        BbStep::Degenerate
    } else {
        BbStep::Value(num / den)
    }
}

/// Bounds a raw BB gain by the gains accepted so far.
///
/// With an empty history the result is `fallback`. Otherwise a finite raw
/// gain is clamped into `[a_min, a_max]` of the accepted history, and a
/// degenerate or non-finite one becomes `a_min`.
pub fn clip_gain(raw: BbStep, history: &[f64], fallback: f64) -> f64 {
    if history.is_empty() {
        return fallback;
    }
    let a_min = history.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match raw {
        BbStep::Value(v) if v.is_finite() => v.clamp(a_min, a_max),
        _ => a_min,
    }
}

/// Mean of `current` and the last `min(window, history.len())` gains.
pub fn smooth_gain(history: &[f64], current: f64, window: usize) -> f64 {
    let t = window.min(history.len());
    let tail = &history[history.len() - t..];
    (tail.iter().sum::<f64>() + current) / (t + 1) as f64
}

/// How many past raw gradients are averaged with the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientAveraging {
    AllHistory,
    FixedWindow(usize),
}

/// Component-wise mean of `current` and the selected window of `history`.
pub fn average_gradient(history: &[Vec<f64>], current: &[f64], mode: GradientAveraging) -> Vec<f64> {
    let m = match mode {
        GradientAveraging::AllHistory => history.len(),
        GradientAveraging::FixedWindow(m) => m.min(history.len()),
    };
    let window = &history[history.len() - m..];
    let count = (m + 1) as f64;
    current
        .iter()
        .enumerate()
        .map(|(j, &g)| (window.iter().map(|h| h[j]).sum::<f64>() + g) / count)
        .collect()
}

/// Rolling state behind the non-monotone gain.
#[derive(Debug, Clone, Default)]
pub struct GainState {
    previous_iterate: Option<Vec<f64>>,
    previous_direction: Option<Vec<f64>>,
    gradients: Vec<Vec<f64>>,
    gains: Vec<f64>,
}

impl GainState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Iterations completed so far.
    pub fn k(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn gradients(&self) -> &[Vec<f64>] {
        &self.gradients
    }

    pub fn average(&self, current: &[f64], mode: GradientAveraging) -> Vec<f64> {
        average_gradient(&self.gradients, current, mode)
    }

    /// BB quotient between the last recorded step and `(iterate, direction)`,
    /// or `None` before the first step has been recorded.
    pub fn bb_gain(&self, iterate: &[f64], direction: &[f64], variant: BbVariant) -> Option<BbStep> {
        let (w0, g0) = (self.previous_iterate.as_ref()?, self.previous_direction.as_ref()?);
        let dw: Vec<f64> = iterate.iter().zip(w0).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = direction.iter().zip(g0).map(|(a, b)| a - b).collect();
        Some(bb_gain(&dw, &dg, variant))
    }

    pub fn clip(&self, raw: BbStep, fallback: f64) -> f64 {
        clip_gain(raw, &self.gains, fallback)
    }

    pub fn smooth(&self, current: f64, window: usize) -> f64 {
        smooth_gain(&self.gains, current, window)
    }

    /// Commits one iteration's iterate, raw gradient, averaged direction and accepted gain.
    pub fn record(&mut self, iterate: Vec<f64>, raw_gradient: Vec<f64>, direction: Vec<f64>, accepted_gain: f64) {
        debug_assert!(accepted_gain.is_finite());
        self.previous_iterate = Some(iterate);
        self.previous_direction = Some(direction);
        self.gradients.push(raw_gradient);
        self.gains.push(accepted_gain);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle_mean(values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    #[test]
    fn monotone_gain_matches_worked_example() {
        let cfg = MonotoneGainConfig::default();
        assert!((monotone_gain(0, &cfg) - 0.047).abs() < 1e-3);
        assert!((monotone_gain(1, &cfg) - 0.047).abs() < 1e-3);
        assert!(monotone_gain(1, &cfg) < monotone_gain(0, &cfg));
    }

    #[test]
    fn monotone_gain_guard() {
        let cfg = MonotoneGainConfig {
            a: 1.0,
            big_a: 0.0,
            alpha: 1.0,
            ..Default::default()
        };
        assert_eq!(monotone_gain(0, &cfg), 1.0);
        assert_eq!(monotone_gain(1, &cfg), 1.0);
        assert_eq!(monotone_gain(3, &cfg), 1.0 / 3.0);
    }

    #[test]
    fn bb_identity_and_scaling() {
        let dw = [0.1, -0.1];
        for v in [BbVariant::RatioGg, BbVariant::RatioXx] {
            assert_eq!(bb_gain(&dw, &dw, v), BbStep::Value(1.0));
            assert_eq!(bb_gain(&dw, &[0.2, -0.2], v), BbStep::Value(0.5));
        }
    }

    #[test]
    fn bb_orthogonal() {
        let dw = [0.1, 0.1];
        let dg = [-0.2, 0.2];
        let oracle = (dw[0] * dg[0] + dw[1] * dg[1]) / (dg[0] * dg[0] + dg[1] * dg[1]);
        assert_eq!(bb_gain(&dw, &dg, BbVariant::RatioGg), BbStep::Value(oracle));
        assert_eq!(oracle, 0.0);
        assert_eq!(bb_gain(&dw, &dg, BbVariant::RatioXx), BbStep::Degenerate);
        assert_eq!(bb_gain(&dw, &[0.0, 0.0], BbVariant::RatioGg), BbStep::Degenerate);
    }

    #[test]
    fn clip_examples() {
        let history = [0.02, 0.05, 0.04];
        assert_eq!(clip_gain(BbStep::Value(0.03), &history, 0.1), 0.03);
        let clamp = |x: f64, lo: f64, hi: f64| lo.max(x.min(hi));
        assert_eq!(clip_gain(BbStep::Value(-1.7), &history, 0.1), clamp(-1.7, 0.02, 0.05));
        assert_eq!(clip_gain(BbStep::Value(9.0), &history, 0.1), 0.05);
        assert_eq!(clip_gain(BbStep::Value(0.3), &[], 0.047), 0.047);
        assert_eq!(clip_gain(BbStep::Degenerate, &[], 0.047), 0.047);
        assert_eq!(clip_gain(BbStep::Degenerate, &history, 0.1), 0.02);
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 0.0] {
            assert_eq!(clip_gain(BbStep::Value(bad), &history, 0.1), 0.02);
        }
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth_gain(&[], 0.05, 2), 0.05);
        assert!((smooth_gain(&[0.03, 0.06], 0.03, 2) - oracle_mean(&[0.03, 0.06, 0.03])).abs() < 1e-12);
        assert!((smooth_gain(&[0.03, 0.06], 0.03, 2) - 0.04).abs() < 1e-12);
        assert_eq!(smooth_gain(&[0.05], 0.05, 2), 0.05);
        assert_eq!(smooth_gain(&[0.01, 0.9], 0.05, 0), 0.05);
    }

    #[test]
    fn averaging_examples() {
        assert_eq!(average_gradient(&[], &[1.0, 2.0], GradientAveraging::AllHistory), vec![1.0, 2.0]);
        assert_eq!(
            average_gradient(&[vec![2.0, -2.0]], &[0.0, 0.0], GradientAveraging::AllHistory),
            vec![1.0, -1.0]
        );
        let history = vec![vec![5.0, 1.0], vec![-3.0, 7.0]];
        assert_eq!(
            average_gradient(&history, &[0.5, 0.25], GradientAveraging::FixedWindow(0)),
            vec![0.5, 0.25]
        );
        let got = average_gradient(&history, &[0.5, 0.25], GradientAveraging::FixedWindow(1));
        assert!((got[0] - oracle_mean(&[-3.0, 0.5])).abs() < 1e-12);
        assert!((got[1] - oracle_mean(&[7.0, 0.25])).abs() < 1e-12);
    }

    #[test]
    fn state_needs_history_for_bb() {
        let mut state = GainState::new();
        assert!(state.bb_gain(&[0.5], &[1.0], BbVariant::RatioGg).is_none());
        state.record(vec![0.5, 0.5], vec![1.0, -1.0], vec![1.0, -1.0], 0.047);
        let step = state
            .bb_gain(&[0.4, 0.6], &[2.0, -2.0], BbVariant::RatioGg)
            .unwrap();
        // dw = [-0.1, 0.1], dg = [1, -1]
        match step {
            BbStep::Value(v) => assert!((v + 0.1).abs() < 1e-12),
            BbStep::Degenerate => panic!("unexpected degenerate step"),
        }
        assert_eq!(state.clip(step, 1.0), 0.047);
        assert_eq!(state.k(), 1);
    }

    proptest! {
        #[test]
        fn clip_is_positive_and_finite(
            history in prop::collection::vec(1e-6f64..10.0, 1..8),
            raw in prop_oneof![
                Just(f64::NAN), Just(f64::INFINITY), Just(f64::NEG_INFINITY),
                -1e9f64..1e9,
            ],
        ) {
            let g = clip_gain(BbStep::Value(raw), &history, 0.5);
            prop_assert!(g.is_finite() && g > 0.0);
            let lo = history.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= g && g <= hi);
        }

        #[test]
        fn smoothing_within_envelope(
            history in prop::collection::vec(1e-4f64..1.0, 0..8),
            current in 1e-4f64..1.0,
            window in 0usize..4,
        ) {
            let t = window.min(history.len());
            let mut pool = history[history.len() - t..].to_vec();
            pool.push(current);
            let lo = pool.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s = smooth_gain(&history, current, window);
            prop_assert!(s >= lo - 1e-15 && s <= hi + 1e-15);
            prop_assert!((s - oracle_mean(&pool)).abs() < 1e-12);
        }

        #[test]
        fn averaging_within_envelope(
            history in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 0..6),
            current in prop::collection::vec(-5.0f64..5.0, 3),
        ) {
            let avg = average_gradient(&history, &current, GradientAveraging::AllHistory);
            for j in 0..3 {
                let mut col: Vec<f64> = history.iter().map(|h| h[j]).collect();
                col.push(current[j]);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(avg[j] >= lo - 1e-12 && avg[j] <= hi + 1e-12);
                prop_assert!((avg[j] - oracle_mean(&col)).abs() < 1e-12);
            }
        }
    }
}
