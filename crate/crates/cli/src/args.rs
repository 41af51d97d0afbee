use clap::{Args, Parser, Subcommand, ValueEnum};
use octopus::analysis::Suite;
use octopus::optimize::InitScheme;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "octopus", version, about = "GD and perturbed GD on the octopus saddle-chain landscape")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run GD and/or PGD trials for one dimension and a list of L values.
    Run(ExperimentArgs),
    /// Like `run`, over the cartesian product of a list of dimensions and L values.
    Sweep(ExperimentArgs),
    /// Run the verification suites and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Gd,
    Pgd,
    Both,
}

impl Algo {
    pub fn expand(self) -> &'static [Algo] {
        match self {
            Algo::Gd => &[Algo::Gd],
            Algo::Pgd => &[Algo::Pgd],
            Algo::Both => &[Algo::Gd, Algo::Pgd],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Gd => "gd",
            Algo::Pgd => "pgd",
            Algo::Both => "both",
        }
    }
}

/// Every flag is optional so that unset ones fall through to the config file
/// and then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Dimension (comma list for `sweep`).
    #[arg(long = "d", value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    /// Gradient curvature constants, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    pub l: Option<Vec<f64>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Step size; defaults to 1/(4L) per L value.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// unitcube, cube:<lo>,<hi> or gaussian:<sigma>.
    #[arg(long)]
    pub init: Option<InitScheme>,
    #[arg(long)]
    pub tthres: Option<u64>,
    #[arg(long)]
    pub gthres: Option<f64>,
    /// Perturbation radius.
    #[arg(long)]
    pub r: Option<f64>,
    /// Iteration cap for both algorithms (defaults differ per algorithm).
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Stop a trial once within this distance of the minimum.
    #[arg(long, conflicts_with = "no_stop")]
    pub stop_dist: Option<f64>,
    /// Always run to the iteration cap.
    #[arg(long)]
    pub no_stop: bool,
    /// Write every k-th step to the trajectory files (region changes and
    /// perturbations are always written).
    #[arg(long)]
    pub record_every: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON experiment file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: Suite,
    #[arg(long = "d")]
    pub d: Option<usize>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials for the non-escape suite.
    #[arg(long)]
    pub trials: Option<u64>,
    /// JSON experiment file; its first d and L are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the report to <dir>/verify.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
