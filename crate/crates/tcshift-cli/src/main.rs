use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tcshift_cli::{run, Command, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "tcshift", version, about = "BCS critical temperature shift in weak external fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory for reports, CSV files and the stage cache.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed of the randomized checks; overrides the config `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies every default resolution.
    #[arg(long, global = true, default_value_t = 1.0)]
    grid_scale: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { config: cli.config, out: cli.out, seed: cli.seed, grid_scale: cli.grid_scale };
    match run(cli.command, &opts) {
        Ok(outcome) => {
            for (stage, status) in &outcome.stages {
                eprintln!("{stage}: {status:?}");
            }
            println!("{}", opts.out.join(format!("{}.json", outcome.report.command)).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
