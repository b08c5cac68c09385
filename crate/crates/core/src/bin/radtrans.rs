//! Runs an experiment config and writes its output bundle.
//!
//! Exit codes: 0 on success, 2 for config or file errors, 3 for numeric
//! failures, including failed checks inside selftest and stability tasks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use radtrans::io::{exit_code, run_experiment, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "radtrans", version, about = "Radiative transport experiments from JSON configs")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Affects wall time only.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let opts = RunOptions {
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
    };
    match run_experiment(&cli.config, &opts) {
        Ok(report) => {
            println!("{}", report.out.display());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("radtrans: checks failed; see {}", report.out.join("summary.json").display());
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("radtrans: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
