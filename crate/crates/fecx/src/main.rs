use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fecx::{Mode, RunConfig};

#[derive(Parser)]
#[command(name = "fecx", version, about = "Ground-state RDM geometry of a two-level pairing model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground states at random points of the parameter sphere.
    Sample(Common),
    /// One interpolated path between two endpoints.
    Trajectory(Common),
    /// Speed statistics over trajectories between two regions.
    Ensemble(Common),
    /// Energy derivatives along one path for several particle numbers.
    Derivatives(Common),
    /// Algebraic identity checks, the level-crossing scan and exports.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "n-particles")]
    n_particles: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Sample(c) => (Mode::Sample, c),
        Command::Trajectory(c) => (Mode::Trajectory, c),
        Command::Ensemble(c) => (Mode::Ensemble, c),
        Command::Derivatives(c) => (Mode::Derivatives, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    let mut cfg = match &common.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    cfg.mode = mode;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = common.out {
        cfg.out = o;
    }
    if let Some(n) = common.n_particles {
        cfg.n_particles = n;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    match fecx::run(&cfg) {
        Ok(outcome) if outcome.complete() => {
            eprintln!("wrote {} files to {}", outcome.files.len(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("failure: {f}");
            }
            eprintln!(
                "partial run: {} failures, {} files in {}",
                outcome.failures.len(),
                outcome.files.len(),
                cfg.out.display()
            );
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
