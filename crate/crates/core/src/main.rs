use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sic_core::config::{parse_config_with, ConfigErrors, Mode, Overrides};
use sic_core::runner::{run, RunError};

/// Environment variable that overrides the configured output directory.
/// `--out` still takes precedence.
const OUTPUT_DIR_ENV: &str = "SIC_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "sic", version, about = "Yang-Mills lattice evolution, collapse times and double-slit ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve classical Yang-Mills fields and record the energy series.
    YmEvolve(Flags),
    /// Collapse time from a nonlinear energy or rate.
    Tau(Flags),
    /// One double-slit ensemble at a fixed collapse rate.
    DoubleSlit(Flags),
    /// Visibility against collapse rate.
    Sweep(Flags),
}

#[derive(Args)]
struct Flags {
    /// Configuration file; the subcommand sets the mode.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (0 ..= 2^63 - 1).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Ensemble size for double-slit and sweep.
    #[arg(long, value_name = "N")]
    trajectories: Option<usize>,
    /// Suppress the result summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = match cli.command {
        Command::YmEvolve(f) => (Mode::YmEvolve, f),
        Command::Tau(f) => (Mode::Tau, f),
        Command::DoubleSlit(f) => (Mode::DoubleSlit, f),
        Command::Sweep(f) => (Mode::Sweep, f),
    };
    match execute(mode, &flags) {
        Ok(summary) => {
            if !flags.quiet {
                for line in summary {
                    println!("{line}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(mode: Mode, flags: &Flags) -> Result<Vec<String>, RunError> {
    let text = match &flags.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            RunError::Config(ConfigErrors(vec![format!(
                "cannot read {}: {e}",
                path.display()
            )]))
        })?,
        None => String::new(),
    };
    let output_dir = flags
        .out
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from));
    let overrides = Overrides {
        mode: Some(mode),
        master_seed: flags.seed,
        output_dir,
        trajectories: flags.trajectories,
    };
    let config = parse_config_with(&text, &overrides)?;
    let report = run(&config)?;
    Ok(report.summary)
}
