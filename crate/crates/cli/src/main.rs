mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::CheckFailure;

/// Probabilistic cellular automata on ±1 lattices: exact verification,
/// Peierls bounds, simulations and contour analysis.
#[derive(Debug, Parser)]
#[command(name = "pcalab", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Model file with `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a model key, e.g. `--set beta=0.8`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    #[arg(long, default_value_t = 42, global = true)]
    pub seed: u64,

    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "PCALAB_WORKERS", global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run exact checks, on the built-in suite or on the configured model.
    ExactVerify {
        /// Restrict to these check families (comma separated or repeated).
        #[arg(long = "check", value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Print the Peierls constants, the bound and the threshold inverse temperature.
    PeierlsBound {
        /// Threshold target for the bound.
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        /// Bisection tolerance for the threshold.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run one chain and report the mean of an observable.
    Simulate {
        #[arg(long, default_value = "magnetization")]
        observable: String,
        /// Initial configuration: plus, minus or random.
        #[arg(long, default_value = "plus")]
        start: String,
        /// Write the final configuration as a +/- grid.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Plus and minus boundary magnetization over a list of inverse temperatures.
    PhaseScan {
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.6,1.0")]
        betas: Vec<f64>,
    },
    /// Period-two check for antiferromagnetic kernels from the all-plus state.
    Nonstat {
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
    },
    /// Monotone coupling of the all-minus and all-plus chains.
    Couple {
        #[arg(long, default_value_t = 1000)]
        steps: u64,
    },
    /// Contour classes of a +/- grid and their weights.
    ContourAnalyze {
        /// Grid file; sites outside it count as +1.
        #[arg(long)]
        grid: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<CheckFailure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
