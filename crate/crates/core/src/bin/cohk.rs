use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cohk::experiment::{self, RunOptions};

/// Coherent-space experiments.
#[derive(Parser)]
#[command(name = "cohk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed, decimal or 0x-prefixed hex; overrides `params.seed`.
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
    },
    /// List the available experiments with their parameters.
    List,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("COHK_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("COHK_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("COHK_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::List => {
            print!("{}", experiment::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => {
            let start = Instant::now();
            match experiment::run_file(&config, &RunOptions { out, seed }) {
                Ok(outcome) => {
                    let r = &outcome.report;
                    for c in &r.checks {
                        let verdict = if c.pass { "PASS" } else { "FAIL" };
                        println!("{verdict} {}: {:e} {} {:e}", c.name, c.value, c.relation, c.tolerance);
                    }
                    println!(
                        "{} seed={:#x} wrote {} in {:.3} s",
                        r.experiment,
                        r.seed,
                        outcome.out_dir.display(),
                        start.elapsed().as_secs_f64()
                    );
                    if r.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
