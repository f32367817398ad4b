use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavelab::harness::{run_file, RunOptions};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Wavepacket realism simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its results plus a manifest.
    Run {
        scenario: PathBuf,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write into the output directory itself instead of a fresh run-* subdirectory.
        #[arg(long)]
        force: bool,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the seed derived from (master, label, index).
    DeriveSeed { master: u64, label: String, index: u64 },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            force,
            threads,
        } => {
            let opts = RunOptions {
                seed,
                out,
                force,
                threads,
            };
            match run_file(&scenario, &opts) {
                Ok(report) => {
                    println!("{}", report.dir.display());
                    for f in &report.files {
                        println!("  {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("wavelab: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::DeriveSeed { master, label, index } => {
            println!("{}", wavelab::rng::derive_seed(master, &label, index));
            ExitCode::SUCCESS
        }
    }
}
