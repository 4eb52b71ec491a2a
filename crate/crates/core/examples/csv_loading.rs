//! Round-trips a synthetic dataset through CSV and scores it.

use spsa_fs::data_io::{load_csv, make_synthetic, write_csv, CsvSchema, SyntheticSpec};
use spsa_fs::error::Result;
use spsa_fs::evaluators::{cv_loss, CvConfig, ModelSpec};
use spsa_fs::types::{FeatureMask, TaskKind};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("spsa-fs-csv-example");
    std::fs::create_dir_all(&dir).map_err(|e| spsa_fs::error::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("synthetic.csv");

    let data = make_synthetic(&SyntheticSpec::leading(TaskKind::Regression, 100, 5, 2, 0.3, 8))?;
    write_csv(&data, &path)?;
    let loaded = load_csv(&path, &CsvSchema::new("target", TaskKind::Regression))?;
    println!("{}: n = {}, p = {}, columns {:?}", path.display(), loaded.n(), loaded.p(), loaded.feature_names());

    let informative = FeatureMask::from_indices(5, &[0, 1])?;
    let loss = cv_loss(&loaded, &informative, &ModelSpec::Ols, &CvConfig::default(), 0)?;
    println!("OLS 1-R^2 on features 1 and 2: {loss:.4}");

    // a classification target read from a file with a dropped id column
    let text = "id,x1,x2,label\n1,0.1,2.0,yes\n2,0.4,1.0,no\n3,0.2,2.5,yes\n4,0.9,0.5,no\n";
    let schema = CsvSchema::new("label", TaskKind::Classification).drop_column("id");
    let small = spsa_fs::data_io::read_csv(text.as_bytes(), "inline", &schema)?;
    println!("inline: n = {}, p = {}, classes = {}", small.n(), small.p(), small.num_classes());
    Ok(())
}
