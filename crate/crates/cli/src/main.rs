//! `bes`: evaluate informative hypotheses on regression data, synthesize
//! evidence across studies, and run the simulation grid.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use bes_core::{Alternative, Family};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bes",
    version,
    about = "Bayes factors for informative hypotheses and evidence synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset and evaluate hypotheses on it.
    Analyze(AnalyzeArgs),
    /// Combine evidence records from several studies.
    Synthesize(SynthesizeArgs),
    /// Run one of the simulation studies.
    Simulate(SimulateArgs),
    /// Summarize a simulation results file for plotting.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub family: Family,
    /// Outcome column.
    #[arg(long)]
    pub outcome: String,
    /// Predictor columns; defaults to every other column.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    /// Hypothesis string, e.g. "b1 > b2 > 0". Repeat for several hypotheses.
    #[arg(long = "hypothesis", required = true)]
    pub hypotheses: Vec<String>,
    /// Labels for the hypotheses, in order; defaults to H1, H2, ...
    #[arg(long = "label")]
    pub labels: Vec<String>,
    #[arg(long, default_value = "unconstrained")]
    pub alternative: Alternative,
    #[arg(long, default_value_t = bes_core::bf::DEFAULT_MC_DRAWS)]
    pub mc_draws: usize,
    /// `auto` or an explicit fraction b in (0, 1).
    #[arg(long, default_value = "auto")]
    pub fraction: String,
    #[arg(long)]
    pub seed: u64,
    /// Study identifier; defaults to the data file stem.
    #[arg(long)]
    pub study_id: Option<String>,
    /// Fit without an intercept column.
    #[arg(long)]
    pub no_intercept: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthesizeArgs {
    /// Evidence record files or directories of `.json` files.
    #[arg(long, num_args = 1.., required = true)]
    pub records: Vec<PathBuf>,
    /// `uniform` or comma-separated probabilities, alternative last.
    #[arg(long, default_value = "uniform")]
    pub priors: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV with the running aggregate after each study.
    #[arg(long)]
    pub trail: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=11))]
    pub sim: u32,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Sample sizes; defaults to the simulation's grid.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Effect sizes; defaults to the simulation's grid.
    #[arg(long, value_delimiter = ',')]
    pub r2: Option<Vec<f64>>,
    #[arg(long, default_value = "unconstrained")]
    pub alternative: Alternative,
    /// Studies per iteration (simulations 9 to 11).
    #[arg(long)]
    pub studies: Option<usize>,
    /// Evaluate simulation 11's hypothesis as three separate components.
    #[arg(long)]
    pub decomposed: bool,
    #[arg(long, default_value_t = bes_core::bf::DEFAULT_MC_DRAWS)]
    pub mc_draws: usize,
    /// `auto` or an explicit fraction b in (0, 1).
    #[arg(long, default_value = "auto")]
    pub fraction: String,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Directory for generated datasets and their manifests.
    #[arg(long)]
    pub save_data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Report(a) => commands::report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
