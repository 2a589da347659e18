use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "h2sched", version, about = "Wind-to-hydrogen contract scheduling pipeline")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Run configuration file (.toml or .json). Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Plant constants file (.toml or .json).
    #[arg(long, global = true)]
    pub plant_config: Option<PathBuf>,
    /// Annual contract volume in kg.
    #[arg(long, global = true, conflicts_with = "contract_fraction")]
    pub contract_kg: Option<f64>,
    /// Contract volume as a fraction of the mean annual maximum production.
    #[arg(long, global = true)]
    pub contract_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Merge electricity prices and wind into a series with synthetic hydrogen prices.
    Synth(SynthArgs),
    /// Write the built-in synthetic demonstration years as series files.
    DemoInputs,
    /// Solve the perfect-foresight optimum for each year.
    Benchmark(YearsArgs),
    /// Fit the fuzzy controller and the bounding envelope to benchmark outputs.
    Train(TrainArgs),
    /// Run the steady and/or fuzzy controller on each year.
    Simulate(SimulateArgs),
    /// Merge comparison tables from several simulate runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// CSV with `timestamp,e_eur_mwh`.
    #[arg(long)]
    pub e: PathBuf,
    /// CSV with `timestamp,w`.
    #[arg(long)]
    pub w: PathBuf,
    /// Target mean hydrogen price before noise, EUR/kg.
    #[arg(long, default_value_t = 3.0)]
    pub mean_h: f64,
    /// Half-width of the uniform relative noise.
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct YearsArgs {
    /// Series files, one per year. Defaults to `train_years` from the config.
    #[arg(long, num_args = 1..)]
    pub years: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub years: YearsArgs,
    /// Directory holding the benchmark outputs. Defaults to the output directory.
    #[arg(long)]
    pub benchmark_dir: Option<PathBuf>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerChoice {
    Steady,
    Bflc,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Series files, one per year. Defaults to `test_years` from the config.
    #[arg(long, num_args = 1..)]
    pub years: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ControllerChoice::Both)]
    pub controller: ControllerChoice,
    /// Fuzzy model file. Defaults to `model.txt` in the output directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Envelope CSV. Defaults to `envelope.csv` next to the model.
    #[arg(long)]
    pub envelope: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Comparison tables written by `simulate`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file. Defaults to `report.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Inconsistent or missing arguments detected after parsing. Exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = commands::Context::new(cli.global).and_then(|ctx| match cli.command {
        Command::Synth(a) => commands::synth(&ctx, &a),
        Command::DemoInputs => commands::demo_inputs(&ctx),
        Command::Benchmark(a) => commands::benchmark(&ctx, &a),
        Command::Train(a) => commands::train(&ctx, &a),
        Command::Simulate(a) => commands::simulate(&ctx, &a),
        Command::Report(a) => commands::report(&ctx, &a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
