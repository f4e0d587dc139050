use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod load;
mod output;
mod svg;

#[derive(Parser)]
#[command(name = "poolrate", version, about = "Rate-distortion converse bounds for pool-based active learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Problem instance (JSON).
    pub instance: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A distortion level: a number, or `mid` for the centre of the achievable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Value(f64),
    Mid,
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mid" => Ok(Level::Mid),
            _ => s.parse().map(Level::Value).map_err(|_| format!("expected a number or `mid`, got {s:?}")),
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Load an instance, check every invariant and print diagnostics.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the Lagrangian over a lambda grid and export the curve.
    RdSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated lambda values; defaults to a log-spaced grid.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Solve for the selection kernel that attains a target distortion.
    RdSolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        target_d: Level,
    },
    /// Tilted information table at a distortion level.
    Tilted {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Level,
    },
    /// Rate dispersion and its decomposition at a distortion level.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Level,
    },
    /// Evaluate one of the three converse bounds.
    Converse {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        theorem: u8,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Labels per letter (theorem 1); defaults to the instance value.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<Level>,
        #[arg(long)]
        eps: Option<f64>,
        /// Rate in nats per letter (theorem 3).
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value = "asymptotic")]
        variant: String,
    },
    /// Exhaustive search over deterministic selection maps.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Comma-separated label budgets.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated distortion thresholds.
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<Level>,
    },
    /// Monte Carlo block simulation of a selection strategy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// per-letter-optimal, greedy-min-dbar, random or label-all.
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        d: Level,
        #[arg(long)]
        n: Option<usize>,
        /// per-letter or pooled.
        #[arg(long, default_value = "per-letter")]
        learner: String,
        /// Selection kernel from `rd-solve`; defaults to the one in the output directory.
        #[arg(long)]
        kernel: Option<PathBuf>,
    },
    /// Curve, dispersion, converse bounds and oracle overlays in one bundle.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Level,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        k_grid: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// 0 ok, 1 I/O, 2 validation, 3 convergence or dependency, 4 budget.
fn exit_code(err: &anyhow::Error) -> u8 {
    use poolrate_core::Error as E;
    if let Some(e) = err.downcast_ref::<E>() {
        return match e {
            E::Budget { .. } => 4,
            E::Convergence { .. } | E::Dependency(_) | E::Decomposition(_) => 3,
            E::Export(_) => 1,
            _ => 2,
        };
    }
    match err.downcast_ref::<load::LoadError>() {
        Some(load::LoadError::Io(..)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
