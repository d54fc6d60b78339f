use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqthermo::cli::{run_experiment, Experiment, RunOptions};

#[derive(Parser)]
#[command(name = "vqthermo", version, about = "Virtual-qubit thermal machine experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// CSV output path; overrides `output` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Virtual temperatures, norms and effective rates of the configured machines.
    VirtualTemp(Common),
    /// Steady state of an effective model or of the full composite model.
    SteadyState(Common),
    /// Time evolution of the composite model.
    Evolve(Common),
    /// Fit effective rates to the composite model.
    FitRates(Common),
    /// Fit effective rates across a parameter sweep.
    SweepFit(Common),
    /// Population inversion of the three-level laser across hot-bath temperatures.
    LaserSweep(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VQTHERMO_LOG", "warn")).init();
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::VirtualTemp(c) => (Experiment::VirtualTemp, c),
        Command::SteadyState(c) => (Experiment::SteadyState, c),
        Command::Evolve(c) => (Experiment::Evolve, c),
        Command::FitRates(c) => (Experiment::FitRates, c),
        Command::SweepFit(c) => (Experiment::SweepFit, c),
        Command::LaserSweep(c) => (Experiment::LaserSweep, c),
    };
    let opts = RunOptions { experiment, config_path: common.config, output: common.output, jobs: common.jobs };
    match run_experiment(&opts) {
        Ok(out) => {
            println!("{}", out.csv.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status as u8)
        }
    }
}
