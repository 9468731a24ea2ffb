use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hkflow_cli::{exit, run_batch, run_file, validate_config, CliError, RunOptions, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "hkflow", version, about = "Run Hamilton-Killing flow scenarios and structural checks")]
struct Cli {
    /// Directory for trajectory and report files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the seed in the scenario file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Suppress per-check output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario.
    Run { config: PathBuf },
    /// Validate a scenario file without running it.
    Validate { config: PathBuf },
    /// Run every *.json scenario in a directory in parallel.
    Batch { dir: PathBuf },
}

fn print_outcome(outcome: &RunOutcome, quiet: bool) {
    if quiet {
        return;
    }
    for c in &outcome.report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let expectation = if c.expected { "" } else { " (expected to fail)" };
        println!("{verdict} {:<18} residual {:.3e} tol {:.1e}{expectation}", c.name, c.residual, c.tolerance);
    }
    println!("trajectory: {}", outcome.trajectory_path.display());
    println!("report: {}", outcome.report_path.display());
}

fn fail(err: &CliError) -> i32 {
    eprintln!("{}", err.to_record());
    err.exit_code()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let options = RunOptions { out_dir: cli.out.clone(), seed_override: cli.seed };
    let code = match &cli.command {
        Command::Run { config } => match run_file(config, &options) {
            Ok(outcome) => {
                print_outcome(&outcome, cli.quiet);
                outcome.exit_code()
            }
            Err(e) => fail(&e),
        },
        Command::Validate { config } => match validate_config(config) {
            Ok(cfg) => {
                if !cli.quiet {
                    println!("ok: {} (n = {}, {} checks)", cfg.id, cfg.n, cfg.checks.len());
                }
                exit::OK
            }
            Err(e) => fail(&e),
        },
        Command::Batch { dir } => match run_batch(dir, &options) {
            Ok(entries) => {
                for entry in &entries {
                    let code = entry.exit_code();
                    match &entry.result {
                        Ok(_) if !cli.quiet => println!("{} {}", code, entry.path.display()),
                        Ok(_) => {}
                        Err(e) => eprintln!("{}", e.to_record()),
                    }
                }
                entries.iter().map(|e| e.exit_code()).max().unwrap_or(exit::OK)
            }
            Err(e) => fail(&e),
        },
    };
    ExitCode::from(code as u8)
}
