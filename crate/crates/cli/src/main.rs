use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use slicedice_cli::{list_experiments, run, Config, RunOptions};

/// Runs one slicedice experiment from a config file.
#[derive(Parser, Debug)]
#[command(name = "slicedice", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, required_unless_present = "list_experiments")]
    config: Option<PathBuf>,
    /// Output directory for summary.json and detail.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; overrides the config and the environment.
    #[arg(long)]
    workers: Option<usize>,
    /// Random seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available experiments and exit.
    #[arg(long)]
    list_experiments: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_experiments {
        print!("{}", list_experiments());
        return ExitCode::SUCCESS;
    }
    let path = cli.config.expect("clap enforces --config");
    let opts = RunOptions { workers: cli.workers, seed: cli.seed };
    let result = Config::from_file(&path).and_then(|cfg| run(&cfg, &cli.out, &opts));
    match result {
        Ok(report) => {
            let verdict = report.summary.get("verdict").and_then(|v| v.as_str()).unwrap_or("done");
            println!("{verdict}: wrote {}", cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("slicedice: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
