//! OLS 1-R^2 against subset size for correlation and SPSA-FS on data with
//! noisy copies of the informative features.

use spsa_fs::baselines::rank_correlation;
use spsa_fs::bench::features_for;
use spsa_fs::data_io::{make_synthetic, SyntheticSpec};
use spsa_fs::error::Result;
use spsa_fs::evaluators::{CvConfig, CvEvaluator, ModelSpec};
use spsa_fs::loss::LossEvaluator;
use spsa_fs::spsa::{rank_features, run_spsafs, SpsaFsConfig};
use spsa_fs::types::{FeatureMask, WeightVector};

fn main() -> Result<()> {
    let percentages: Vec<u32> = (1..=10).map(|i| 10 * i).collect();
    let mut at_or_below = 0;
    let mut points = 0;
    for seed in 0..5 {
        let spec = SyntheticSpec {
            correlated: 6,
            ..SyntheticSpec::regression(150, 20, vec![1, 2, 3, 4], 1.0, seed)
        };
        let data = make_synthetic(&spec)?;
        let p = data.p();
        let eval = CvEvaluator::new(&data, ModelSpec::Ols, CvConfig::default())?;
        let corr = rank_correlation(&data).order;
        let trace = run_spsafs(&eval, &WeightVector::uniform(p, 0.5), &SpsaFsConfig { seed, ..Default::default() })?;
        let spsa = rank_features(&trace.final_weights, p)?;
        println!("seed {seed}");
        for &q in &percentages {
            let m = features_for(q, p);
            let a = eval.evaluate(&FeatureMask::from_indices(p, &corr[..m])?, seed)?;
            let b = eval.evaluate(&FeatureMask::from_indices(p, &spsa[..m])?, seed)?;
            println!("  {q:>3}%  correlation {a:.3}  spsafs {b:.3}");
            points += 1;
            if b <= a {
                at_or_below += 1;
            }
        }
    }
    println!("spsafs at or below correlation on {at_or_below}/{points} grid points");
    Ok(())
}
