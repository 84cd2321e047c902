//! `parisian`: evaluate identities, simulate paths, run the verification
//! suite and write sweep tables.
//!
//! Exit codes: 0 success, 1 evaluation or check failure, 2 usage or
//! configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "parisian", version, about = "Spectrally negative Levy processes with Parisian reflection")]
struct Cli {
    /// Model JSON file, or one of the built-in names brownian,
    /// brownian_driftless, cramer_lundberg, jump_diffusion.
    #[arg(long, global = true, default_value = "cramer_lundberg")]
    model: String,

    /// Worker threads for simulation; defaults to one per core.
    #[arg(long, global = true, env = "PARISIAN_THREADS")]
    threads: Option<usize>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pretty,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ScenarioArgs {
    /// Discount rate.
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    q: f64,
    /// Observation intensity.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    r: f64,
    /// Absolute-ruin level (`-inf` for none).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    a: f64,
    /// Upper level or dividend barrier (`inf` for none).
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    b: f64,
    /// Starting point; the argument `y` of the kernel identities.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    /// Laplace argument of the injected capital.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// Number of simulated paths.
    #[arg(long)]
    paths: Option<u64>,
    /// Seed of the per-path random streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Euler step for models with a Gaussian part.
    #[arg(long)]
    step: Option<f64>,
    /// Time cap; defaults to 16.1/q.
    #[arg(long)]
    horizon: Option<f64>,
    /// Antithetic path pairs.
    #[arg(long)]
    antithetic: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one identity.
    Eval {
        /// Identity name, e.g. g, h, f, ruin_laplace, j_hat, kernel_H, U1_0.
        identity: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also print the intermediate kernel values.
        #[arg(long)]
        trace: bool,
    },
    /// Monte Carlo estimates of one or more targets (comma separated).
    Simulate {
        targets: String,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Print the event trace of each path instead of estimating.
        #[arg(long)]
        trace: bool,
    },
    /// Run a verification suite.
    Verify {
        /// Suite name: default or fast.
        #[arg(long, default_value = "default")]
        suite: String,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Tabulate identities (comma separated) over a grid of one variable.
    Sweep {
        identities: String,
        /// Swept variable: q, r, a, b, x or theta.
        #[arg(long)]
        var: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        /// Number of grid points.
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(code) => code,
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}
