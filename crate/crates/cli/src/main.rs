//! `smic`: semi-supervised SMI clustering from the command line.

mod commands;
mod files;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bad input detected by the front end itself.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "smic", version, about = "Semi-supervised clustering by squared-loss mutual information")]
pub struct Cli {
    /// Seed for every random choice (constraint sampling, LSMI centers and
    /// folds) [default: 0, or the config seed for `bench`].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "SMIC_JOBS")]
    pub jobs: Option<usize>,

    /// Where to write the run manifest. Defaults to `<output>.manifest.json`,
    /// or standard error when output goes to standard output.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum NormalizeArg {
    Minmax,
    Zscore,
    None,
}

impl From<NormalizeArg> for smic_core::Normalization {
    fn from(v: NormalizeArg) -> Self {
        match v {
            NormalizeArg::Minmax => smic_core::Normalization::MinMaxSymmetric,
            NormalizeArg::Zscore => smic_core::Normalization::ZScore,
            NormalizeArg::None => smic_core::Normalization::None,
        }
    }
}

#[derive(Args, Clone)]
pub struct InputArgs {
    /// Feature CSV, one sample per row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// The last CSV column holds class labels (ignored for clustering).
    #[arg(long)]
    pub labeled: bool,
    /// Per-column normalization applied after loading.
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeArg,
}

#[derive(Args, Clone)]
pub struct GridArgs {
    /// Neighborhood sizes to search, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8,9,10")]
    pub t_grid: Vec<usize>,
    /// Must-link weights to search.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
    pub gamma_grid: Vec<f64>,
    /// Cannot-link weights to search (forced to 0 for more than two classes).
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
    pub eta_grid: Vec<f64>,
    #[command(flatten)]
    pub lsmi: LsmiArgs,
}

#[derive(Args, Clone)]
pub struct LsmiArgs {
    /// Cross-validation folds for LSMI.
    #[arg(long, default_value_t = smic_core::lsmi::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Maximum number of LSMI kernel centers.
    #[arg(long, default_value_t = smic_core::lsmi::DEFAULT_CENTER_CAP)]
    pub center_cap: usize,
    /// Gaussian widths for LSMI; defaults to multiples of the median distance.
    #[arg(long, value_delimiter = ',')]
    pub kappa_grid: Option<Vec<f64>>,
    /// Ridge regularizers for LSMI.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    pub delta_grid: Vec<f64>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Cluster a dataset, optionally with must-/cannot-links.
    Cluster(commands::ClusterArgs),
    /// Search hyperparameters and write the scored candidate table.
    Select(commands::SelectArgs),
    /// Label new samples with a saved model.
    Predict(commands::PredictArgs),
    /// Sample links from ground-truth labels.
    Constraints(commands::ConstraintArgs),
    /// Adjusted Rand Index between two label files.
    Ari(commands::AriArgs),
    /// Run a benchmark described by a JSON config.
    Bench(commands::BenchArgs),
    /// Estimate the mutual information between features and labels.
    Lsmi(commands::LsmiCmdArgs),
    /// Generate Gaussian blobs as a labeled CSV.
    Blobs(commands::BlobArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<smic_core::Error>() {
            return if e.is_user_error() { 2 } else { 1 };
        }
        if cause.is::<Usage>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
