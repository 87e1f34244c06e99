use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use phi4_cli::{run, Command, Overrides};

/// Lattice Phi^4 experiments: constants, samples, identity checks, free
/// energies, oracles, cutoff convergence and Laplace transforms.
#[derive(Parser, Debug)]
#[command(name = "phi4", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Flat key = value configuration file (defaults apply without one).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for records and tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let o = Overrides { config: args.config, seed: args.seed, workers: args.workers, out: args.out };
    match run(args.command, &o) {
        Ok(rec) => {
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&rec.outputs).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("phi4 {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
