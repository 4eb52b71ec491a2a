//! Sequential searches against the exhaustive optimum on one small problem.

use spsa_fs::baselines::{exhaustive_best, sbs, sfbs, sffs, sfs, SearchBudget};
use spsa_fs::data_io::{make_synthetic, SyntheticSpec};
use spsa_fs::error::Result;
use spsa_fs::evaluators::{CvConfig, CvEvaluator, ModelSpec};
use spsa_fs::loss::CountingEvaluator;
use spsa_fs::types::TaskKind;

fn main() -> Result<()> {
    let data = make_synthetic(&SyntheticSpec::leading(TaskKind::Classification, 150, 9, 3, 1.0, 4))?;
    let eval = CountingEvaluator::new(CvEvaluator::new(
        &data,
        ModelSpec::Cart { max_depth: 3, min_leaf: 2 },
        CvConfig::default(),
    )?);
    let p = data.p();
    let budget = SearchBudget::default();
    let seed = 0;
    for (name, search) in [("sfs", sfs as fn(_, _, _, _) -> _), ("sbs", sbs), ("sffs", sffs), ("sfbs", sfbs)] {
        let out = search(&eval, p, &budget, seed)?;
        println!("{name:5} {:?} loss {:.3} ({} evaluations)", out.mask.one_based(), out.loss, out.evaluations);
    }
    let best = exhaustive_best(&eval, p, seed)?;
    println!("exh   {:?} loss {:.3} ({} evaluations)", best.mask.one_based(), best.loss, best.evaluations);
    println!("evaluator called {} times in total", eval.calls());
    Ok(())
}
