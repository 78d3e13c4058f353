//! `wabc`: simulate data, compute distances, run ABC-SMC and reference MCMC,
//! compare particle clouds and time the distance kernels.

mod commands;
mod config;
mod io;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 2.
    Usage(String),
    /// Failure while running; exit code 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<wabc::Error> for CliError {
    fn from(e: wabc::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "wabc", version, about = "ABC with transport distances between empirical distributions")]
struct Cli {
    /// Worker threads. Results do not depend on this value.
    #[arg(long, global = true, env = "WABC_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a data set from a model at a given parameter.
    Simulate(SimulateArgs),
    /// Distance between two data files.
    Distance(DistanceArgs),
    /// Run the adaptive ABC-SMC sampler from a JSON config.
    Smc(SmcArgs),
    /// Random-walk Metropolis-Hastings on the exact likelihood.
    Mh(MhArgs),
    /// W1 between particle clouds and a reference sample.
    Evaluate(EvaluateArgs),
    /// Time a distance over a grid of sample sizes.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: String,
    /// Comma-separated parameter values in the model's coordinate order.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub toggle_horizon: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Wasserstein order.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Ground metric: euclidean or l1.
    #[arg(long, default_value = "euclidean")]
    pub metric: String,
    /// none, curve or delay.
    #[arg(long, default_value = "none")]
    pub embedding: String,
    /// Curve-matching weight; the aspect-ratio heuristic on `x` when absent.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lags: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the JSON record to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SmcArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MhArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub data: PathBuf,
    /// Iterations per chain, burn-in included.
    #[arg(long, default_value_t = 22_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    #[arg(long, default_value_t = 2_000)]
    pub pilot: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Particle or chain CSV to compare.
    #[arg(long, conflicts_with = "steps")]
    pub particles: Option<PathBuf>,
    /// Directory of per-step particle files written by `smc`.
    #[arg(long)]
    pub steps: Option<PathBuf>,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 2048)]
    pub max_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "hilbert")]
    pub method: String,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot start {w} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Distance(a) => commands::distance(a),
        Command::Smc(a) => commands::smc(a),
        Command::Mh(a) => commands::mh(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
