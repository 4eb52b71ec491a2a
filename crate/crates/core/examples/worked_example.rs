//! Two BSPSA iterations on six features with scripted perturbations and losses.

use std::collections::VecDeque;
use std::sync::Mutex;

use spsa_fs::error::Result;
use spsa_fs::loss::LossEvaluator;
use spsa_fs::spsa::{run_bspsa_with, BspsaConfig, ScriptedPerturbations};
use spsa_fs::types::{FeatureMask, PerturbationVector, WeightVector};

struct Scripted(Mutex<VecDeque<f64>>);

impl LossEvaluator for Scripted {
    fn evaluate(&self, mask: &FeatureMask, _: u64) -> Result<f64> {
        let y = self.0.lock().unwrap().pop_front().expect("script exhausted");
        println!("  L({mask}) = {y}");
        Ok(y)
    }
}

fn main() -> Result<()> {
    let losses = Scripted(Mutex::new(VecDeque::from(vec![0.32, 0.53, 0.53, 0.38])));
    let mut deltas = ScriptedPerturbations::new(vec![
        PerturbationVector::from_signs(&[-1, -1, 1, 1, -1, 1])?,
        PerturbationVector::from_signs(&[-1, 1, 1, -1, 1, 1])?,
    ]);
    let cfg = BspsaConfig {
        iterations: 2,
        ..Default::default()
    };
    let trace = run_bspsa_with(&losses, &WeightVector::uniform(6, 0.5), &cfg, &mut deltas)?;
    for r in &trace.records {
        println!("k = {}: gain {:.5}, w = {:.4?}", r.k, r.gain_used, r.weights.as_slice());
    }
    println!("selected features {:?}", trace.final_mask.one_based());
    Ok(())
}
