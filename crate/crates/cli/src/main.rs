use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freewalk_cli::{run_experiment, ExperimentConfig, Stage};

#[derive(Parser)]
#[command(name = "freewalk", version, about = "Run freewalk experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Critical exponent and its oracles.
    Pressure,
    /// Cylinder masses, Radon-Nikodym cocycle and shadow audits.
    Gibbs,
    /// Kernel decay certificate and the spike constant sweep.
    AuditSpikes,
    /// Greedy spike decomposition of the target density.
    Decompose,
    /// Walk assembly, stationarity, statistics and hitting simulation.
    Walk,
    /// Comparison audit in the hyperbolic plane.
    ValidateH2,
    /// Every stage listed in the config.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("reports"));
    let stages = match cli.command {
        Command::Pressure => vec![Stage::Pressure],
        Command::Gibbs => vec![Stage::Gibbs],
        Command::AuditSpikes => vec![Stage::AuditSpikes],
        Command::Decompose => vec![Stage::Decompose],
        Command::Walk => vec![Stage::Walk],
        Command::ValidateH2 => vec![Stage::ValidateH2],
        Command::All => cfg.stages.clone(),
    };
    match run_experiment(&cfg, &stages, &out) {
        Ok(summary) => {
            print!("{}", summary.to_text(&cfg.hash()));
            let failed = summary.failed_stages();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: checks failed in stage {}", failed.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "));
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
