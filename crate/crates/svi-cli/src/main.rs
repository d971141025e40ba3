use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Constrained jump-diffusion studies: simulation, scheme comparisons,
/// penalization and refinement sweeps, and property batteries.
#[derive(Parser, Debug)]
#[command(name = "svi", version, about)]
struct Cli {
    /// Study to run: simulate, converge-dt, converge-yosida, picard,
    /// averaging-sweep, spde, particles, proptest
    command: String,

    /// Path to the TOML experiment configuration
    #[arg(long)]
    config: PathBuf,

    /// Master seed override (beats SVI_SEED and the config value)
    #[arg(long)]
    seed: Option<u64>,

    /// Worker pool size override (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,

    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let status = svi_cli::run(&svi_cli::RunOptions {
        command: cli.command,
        config_text,
        seed_override: cli.seed,
        workers_override: cli.workers,
        out_override: cli.out,
    });
    ExitCode::from(status.code() as u8)
}
