//! `peerde`: batch front end for DE benchmarking, survey reports, model fits
//! and synthetic reporter-bias studies. Every command writes a JSON document
//! with a reproducibility manifest to `--out` and echoes it on stdout.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::CONFIG_ENV;

#[derive(Debug, Parser)]
#[command(
    name = "peerde",
    version,
    about = "Differential evolution and peer-assessment analysis"
)]
pub struct Cli {
    /// Flat TOML file of flag defaults, keyed by long flag name.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream of the command [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files [default: .].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize a benchmark function; writes optimize.json and convergence.csv.
    Optimize(OptimizeArgs),
    /// Threshold shares, medians and respondent workload of a survey CSV; writes report.json.
    Report(ReportArgs),
    /// Fit a catalog or custom logit model to a survey CSV; writes fit.json.
    Fit(FitArgs),
    /// Replicated synthetic studies comparing self, parent and peer estimates; writes simulate.json and replications.csv.
    Simulate(SimulateArgs),
    /// One synthetic study as survey CSV plus its ground truth.
    ExportFixture(ExportArgs),
}

#[derive(Debug, Args, Default)]
pub struct DeArgs {
    /// Population size.
    #[arg(long)]
    pub np: Option<usize>,
    /// Differential weight in [0, 2].
    #[arg(long)]
    pub f: Option<f64>,
    /// Crossover rate in [0, 1].
    #[arg(long)]
    pub cr: Option<f64>,
    /// rand1, best1, rand_to_best1, best2 or rand2.
    #[arg(long)]
    pub strategy: Option<String>,
    /// Maximum number of generations.
    #[arg(long)]
    pub gens: Option<usize>,
    /// Stop once the best fitness is at or below this value.
    #[arg(long)]
    pub target: Option<f64>,
    /// Stop after this many generations without improvement; 0 disables.
    #[arg(long)]
    pub stagnation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// sphere, rosenbrock or rastrigin [default: sphere].
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Dimension [default: 10].
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub de: DeArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Survey CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Restrict to child, student or parent.
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Survey CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// M1 to M6, or custom [default: M1].
    #[arg(long)]
    pub model: Option<String>,
    /// loglik or auc [default: loglik].
    #[arg(long)]
    pub criterion: Option<String>,
    /// Recode the response as binary: rating at or above this cutoff.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Response question of a custom model, or "female".
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated regressors of a custom model.
    #[arg(long, value_delimiter = ',')]
    pub regressors: Option<Vec<String>>,
    /// Respondent group of the model (overrides the catalog's).
    #[arg(long)]
    pub group: Option<String>,
    /// Coefficient search box half-width [default: 10].
    #[arg(long = "coef-bound")]
    pub coef_bound: Option<f64>,
    #[command(flatten)]
    pub de: DeArgs,
}

#[derive(Debug, Args, Default)]
pub struct SynthArgs {
    /// Number of subjects [default: 300].
    #[arg(long)]
    pub subjects: Option<usize>,
    /// Peer reports per subject [default: 5].
    #[arg(long)]
    pub peers: Option<usize>,
    /// Peer noise standard deviation [default: 0.5].
    #[arg(long)]
    pub noise: Option<f64>,
    /// Spread of Q1–Q7 around each reporter's Q8 [default: 0.5].
    #[arg(long = "item-noise")]
    pub item_noise: Option<f64>,
    /// Probability that a self-report is shifted down [default: 0.365].
    #[arg(long = "self-under")]
    pub self_under: Option<f64>,
    /// Probability that a parent shifts down [default: 0.357].
    #[arg(long = "parent-under")]
    pub parent_under: Option<f64>,
    /// Probability that a parent shifts up [default: 0.348].
    #[arg(long = "parent-over")]
    pub parent_over: Option<f64>,
    /// Size of a biased shift in half steps [default: 1].
    #[arg(long = "shift-steps")]
    pub shift_steps: Option<u8>,
    /// Seven comma-separated weights of the true ratings 0, 0.5, ..., 3 [default: uniform].
    #[arg(long = "truth-weights", value_delimiter = ',')]
    pub truth_weights: Option<Vec<f64>>,
    /// Set all mis-report probabilities to zero.
    #[arg(long = "bias-zero")]
    pub bias_zero: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of replications [default: 100].
    #[arg(long)]
    pub reps: Option<usize>,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(text) => {
            // The files are written already; a closed stdout is not a failure.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
