//! SPSA-FS and BSPSA on a synthetic classification problem, checked against exhaustive search.

use spsa_fs::baselines::exhaustive_best;
use spsa_fs::data_io::{make_synthetic, SyntheticSpec};
use spsa_fs::error::Result;
use spsa_fs::evaluators::{CvConfig, CvEvaluator, ModelSpec};
use spsa_fs::gain::GradientAveraging;
use spsa_fs::loss::LossEvaluator;
use spsa_fs::spsa::{run_bspsa, run_spsafs, BspsaConfig, SpsaFsConfig};
use spsa_fs::types::{TaskKind, WeightVector};

fn main() -> Result<()> {
    let data = make_synthetic(&SyntheticSpec::leading(TaskKind::Classification, 200, 10, 3, 0.5, 1))?;
    let eval = CvEvaluator::new(&data, ModelSpec::Knn { k: 5 }, CvConfig::default())?;
    let w0 = WeightVector::uniform(data.p(), 0.5);
    let noise_seed = 0;

    let best = exhaustive_best(&eval, data.p(), noise_seed)?;
    println!("exhaustive: {:?} loss {:.3}", best.mask.one_based(), best.loss);

    let runs = [
        ("bspsa", run_bspsa(&eval, &w0, &BspsaConfig { seed: 1, ..Default::default() })?),
        ("spsafs", run_spsafs(&eval, &w0, &SpsaFsConfig { seed: 1, ..Default::default() })?),
        (
            "spsafs, no averaging",
            run_spsafs(
                &eval,
                &w0,
                &SpsaFsConfig {
                    seed: 1,
                    gradient_averaging: GradientAveraging::FixedWindow(0),
                    ..Default::default()
                },
            )?,
        ),
    ];
    for (name, trace) in runs {
        let loss = eval.evaluate(&trace.final_mask, noise_seed)?;
        println!(
            "{name}: {:?} loss {loss:.3} after {} evaluations",
            trace.final_mask.one_based(),
            trace.evaluations
        );
    }
    Ok(())
}
