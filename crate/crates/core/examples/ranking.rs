//! Correlation, RELIEF and SPSA-FS weight rankings scored at several subset sizes.

use spsa_fs::baselines::{rank_correlation, rank_relief};
use spsa_fs::data_io::{make_synthetic, SyntheticSpec};
use spsa_fs::error::Result;
use spsa_fs::evaluators::{cv_loss, CvConfig, CvEvaluator, ModelSpec};
use spsa_fs::spsa::{rank_features, run_spsafs, SpsaFsConfig};
use spsa_fs::types::{FeatureMask, TaskKind, WeightVector};

fn main() -> Result<()> {
    let data = make_synthetic(&SyntheticSpec::leading(TaskKind::Classification, 200, 40, 5, 1.0, 2))?;
    let model = ModelSpec::GaussianNb;
    let cv = CvConfig::default();
    let p = data.p();

    let trace = run_spsafs(
        &CvEvaluator::new(&data, model, cv)?,
        &WeightVector::uniform(p, 0.5),
        &SpsaFsConfig { iterations: 150, ..Default::default() },
    )?;
    let orders = [
        ("correlation", rank_correlation(&data).order),
        ("relief", rank_relief(&data, None, 0)?.order),
        ("spsafs", rank_features(&trace.final_weights, p)?),
    ];
    println!("{:12} {}", "m", [5, 10, 20, 40].map(|m| format!("{m:>7}")).join(""));
    for (name, order) in orders {
        let mut line = format!("{name:12} ");
        for m in [5, 10, 20, 40] {
            let loss = cv_loss(&data, &FeatureMask::from_indices(p, &order[..m])?, &model, &cv, 0)?;
            line += &format!("{loss:>7.3}");
        }
        println!("{line}   top 5: {:?}", order[..5].iter().map(|j| j + 1).collect::<Vec<_>>());
    }
    Ok(())
}
