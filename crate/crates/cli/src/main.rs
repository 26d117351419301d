//! `augustin` command-line tool.

mod commands;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "augustin",
    version,
    about = "Augustin capacities, duals and sphere packing bounds"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Report format; `ht-check` and `verify` default to text, others to JSON.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for randomized commands.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Channel plus the prior constraint set.
#[derive(Args, Debug, Clone)]
pub struct ChannelArgs {
    /// Channel JSON file.
    #[arg(long, short)]
    pub channel: PathBuf,
    /// Constraint set JSON file.
    #[arg(long, conflicts_with = "rho")]
    pub constraints: Option<PathBuf>,
    /// Cost levels, shorthand for a cost constraint.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rényi divergence of order alpha between two distributions.
    Divergence {
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[arg(long)]
        alpha: f64,
    },
    /// Augustin mean and information of a prior.
    Mean {
        #[arg(long, short)]
        channel: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        prior: Vec<f64>,
        #[arg(long)]
        alpha: f64,
        /// Use the fixed-point iteration instead of Newton's method.
        #[arg(long)]
        fixed_point: bool,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
    },
    /// Constrained Augustin capacity and center; several orders give a curve.
    Capacity {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 5_000)]
        max_iter: usize,
    },
    /// Minimizes the Augustin-Legendre dual at a cost level.
    Dual {
        #[arg(long, short)]
        channel: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<f64>,
        #[arg(long)]
        alpha: f64,
    },
    /// Sphere packing exponent over a rate grid `start:stop:step` (nats).
    Exponent {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, value_parser = commands::parse_grid)]
        rate_grid: commands::Grid,
    },
    /// Averaged sphere packing exponent over a rate grid.
    AvgExponent {
        #[command(flatten)]
        ch: ChannelArgs,
        #[arg(long, value_parser = commands::parse_grid)]
        rate_grid: commands::Grid,
        #[arg(long)]
        eps: f64,
    },
    /// Non-asymptotic lower bound on the error probability of list codes.
    SpbBound(commands::SpbArgs),
    /// Checks the hypothesis-testing bound on product distributions.
    HtCheck {
        /// First distribution of one component.
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<f64>,
        /// Second distribution of one component.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        /// Number of identical components.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        k: u32,
        /// Enumerate every event instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        /// Random events when not exhaustive.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Runs the invariant suite on seeded random instances.
    Verify {
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

/// How a command finished, short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NonConvergence,
    Inapplicable,
    InvariantFailed,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NonConvergence => 2,
            Status::Inapplicable => 3,
            Status::InvariantFailed => 4,
        }
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<augustin::Error>() {
        Some(augustin::Error::NonConvergence { .. }) => 2,
        Some(augustin::Error::Hypothesis(_)) => 3,
        _ => 1,
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("AUGUSTIN_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            anyhow::anyhow!("AUGUSTIN_THREADS must be a positive integer, got {v:?}")
        })?;
        anyhow::ensure!(n > 0, "AUGUSTIN_THREADS must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is taken by non-convergence
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let run = init_threads().and_then(|()| commands::run(&cli));
    match run {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
