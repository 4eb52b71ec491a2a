//! Runs a config file through the benchmark harness, as `spsa-fs run` does.
//!
//! `cargo run --example experiment -- configs/small_run.toml [out-dir]`

use std::path::PathBuf;

use spsa_fs::bench::{cmd_run, Command, ExperimentConfig};
use spsa_fs::error::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/small_run.toml").into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("spsa-fs-experiment"));
    let cfg = ExperimentConfig::load(&config)?;
    let data = cfg.prepare(Command::Run)?;
    let report = cmd_run(&cfg, &data, &out)?;
    print!("{}", std::fs::read_to_string(out.join("table.csv")).unwrap_or_default());
    println!("{} files under {}, {} failed cells", report.files.len(), out.display(), report.failures.len());
    Ok(())
}
