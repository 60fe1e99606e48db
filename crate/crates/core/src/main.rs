use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lyapprox::harness::{execute, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "lyapprox", version, about = "Lyapunov exponents of cocycles versus their periodic data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `rng_seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// QR spectrum of every cocycle.
    Spectrum,
    /// Exponents at periodic points.
    Periodic,
    /// Spectrum errors at periodic points.
    Theorem1,
    /// Norm errors at periodic points, with the good-time search.
    Theorem2,
    /// Several cocycles at shared periodic points.
    Multi,
    /// Good-time set of the reference trace.
    Goodtimes,
    /// Lyapunov-norm distortion at sample points.
    Pesin,
    /// Cone invariance along a shadowing orbit.
    Cones,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Periodic => Command::Periodic,
            Cmd::Theorem1 => Command::Theorem1,
            Cmd::Theorem2 => Command::Theorem2,
            Cmd::Multi => Command::Multi,
            Cmd::Goodtimes => Command::GoodTimes,
            Cmd::Pesin => Command::Pesin,
            Cmd::Cones => Command::Cones,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let run = || -> lyapprox::Result<i32> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = cli.seed {
            cfg.rng_seed = seed;
        }
        let out_dir = cli
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let outcome = execute(cli.command.into(), &cfg, &out_dir)?;
        if !cli.quiet {
            for line in &outcome.lines {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Ok(outcome.exit_code)
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
