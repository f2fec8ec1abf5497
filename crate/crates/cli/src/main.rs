//! `netr0`: build labelled network corpora, train R0 regressors, rank
//! structural features and predict R0 for new networks.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Profile;

#[derive(Debug, Parser)]
#[command(name = "netr0", version, about = "Predict epidemic R0 from network structure")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (defaults to the profile's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for generation, simulation and cross-validation.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Named parameter set.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate networks, simulate epidemics and write the labelled dataset.
    Generate(GenerateArgs),
    /// Cross-validate a model, then fit it on every row and save it.
    Train(TrainArgs),
    /// Predict R0 for an edge list or an explicit feature vector.
    Predict(PredictArgs),
    /// Rank features by their principal-component contribution index.
    Rank(RankArgs),
    /// Write (true, predicted) pairs of a model on a dataset.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Networks per family (overrides every family count).
    #[arg(long)]
    pub per_family: Option<usize>,
    /// Build only this family (ER, WS, SF, BA, SBM).
    #[arg(long)]
    pub family: Option<String>,
    /// Nodes per network.
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// linear, svr-linear, svr-poly, svr-rbf or ann.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Hidden-layer width of the network model.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Fit on raw feature values instead of standardised ones.
    #[arg(long)]
    pub no_standardize: bool,
    /// SVR box constraint.
    #[arg(long)]
    pub c: Option<f64>,
    /// SVR tube half-width.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub coef0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Edge list of the network to assess.
    #[arg(long, conflicts_with = "features")]
    pub edges: Option<PathBuf>,
    /// Comma-separated feature values in the model's column order.
    #[arg(long, allow_hyphen_values = true)]
    pub features: Option<String>,
    /// Also simulate the epidemic on the edge list and report its R0.
    #[arg(long, requires = "edges")]
    pub simulate: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Covariance between samples or between features.
    #[arg(long, value_parser = ["sample", "feature"])]
    pub axis: Option<String>,
    /// Column preprocessing.
    #[arg(long, value_parser = ["none", "center", "standardize"])]
    pub scaling: Option<String>,
    /// Centre over the observation axis when forming the covariance.
    #[arg(long)]
    pub center_cov: bool,
    /// Principal components to use (default: enough for --energy).
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long)]
    pub energy: Option<f64>,
    /// Also write the dataset reduced to the top-m features.
    #[arg(long)]
    pub select: Option<usize>,
    /// Where the reduced dataset goes.
    #[arg(long, requires = "select")]
    pub projected: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Keep this many randomly chosen rows.
    #[arg(long)]
    pub subset: Option<usize>,
}

/// An error bound for the terminal, with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn user(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn exit_code(e: &netr0::Error) -> u8 {
    match e {
        netr0::Error::Divergence { .. } => 2,
        netr0::Error::Fold { source, .. } => exit_code(source),
        _ => 1,
    }
}

impl From<netr0::Error> for Failure {
    fn from(e: netr0::Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = config::FileConfig::load(cli.config.as_deref())?;
    let profile = match cli.profile {
        Some(p) => p,
        None => file.profile()?.unwrap_or(Profile::Desk),
    };
    if let Some(jobs) = cli.jobs.or(file.jobs()?) {
        if jobs == 0 {
            return Err(Failure::user("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::internal(e.to_string()))?;
    }
    let ctx = commands::Context {
        profile,
        seed: cli.seed.or(file.seed()?),
        out: cli.out,
        file,
    };
    match cli.command {
        Command::Generate(a) => commands::generate(&ctx, &a),
        Command::Train(a) => commands::train(&ctx, &a),
        Command::Predict(a) => commands::predict(&ctx, &a),
        Command::Rank(a) => commands::rank(&ctx, &a),
        Command::Report(a) => commands::report(&ctx, &a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(2),
    }
}
