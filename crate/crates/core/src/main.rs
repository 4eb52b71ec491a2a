use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spsa_fs::bench::{self, Command, ExperimentConfig, Report};
use spsa_fs::error::Error;

/// Feature selection experiments with BSPSA, SPSA-FS and classical baselines.
#[derive(Parser)]
#[command(name = "spsa-fs", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run every method and repetition; write traces, summaries and the comparison table.
    Run(Common),
    /// Score the top-m features of each ranking method.
    Rank(Common),
    /// Sweep subset sizes on a regression dataset and record 1-R^2.
    Regress(Common),
    /// Parse and check a config, including the dataset it names.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides `root_seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Overrides `output_dir`, which in turn overrides $SPSA_FS_OUT.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the merged config as TOML before doing anything else.
    #[arg(long)]
    print_effective_config: bool,
}

fn effective(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.root_seed = seed;
    }
    cfg.output_dir = common
        .out
        .clone()
        .or(cfg.output_dir)
        .or_else(|| std::env::var_os(bench::OUT_ENV).map(PathBuf::from))
        .or_else(|| Some(PathBuf::from("spsa-fs-out")));
    Ok(cfg)
}

fn execute(sub: Sub) -> Result<Report, Error> {
    let (common, command) = match sub {
        Sub::Run(c) => (c, Some(Command::Run)),
        Sub::Rank(c) => (c, Some(Command::Rank)),
        Sub::Regress(c) => (c, Some(Command::Regress)),
        Sub::ValidateConfig(c) => (c, None),
    };
    let cfg = effective(&common)?;
    if common.print_effective_config {
        print!("{}", cfg.to_toml()?);
    }
    let Some(command) = command else {
        cfg.prepare(Command::Run)?;
        eprintln!("{}: ok", common.config.display());
        return Ok(Report::default());
    };
    let dataset = cfg.prepare(command)?;
    let out = cfg.output_dir.clone().unwrap_or_default();
    bench::with_jobs(common.jobs, || match command {
        Command::Run => bench::cmd_run(&cfg, &dataset, &out),
        Command::Rank => bench::cmd_rank(&cfg, &dataset, &out),
        Command::Regress => bench::cmd_regress(&cfg, &dataset, &out),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(report) => {
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
