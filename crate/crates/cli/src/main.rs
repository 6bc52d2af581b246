//! `seedbank`: batch experiments for Wright-Fisher populations with a seed
//! bank.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{ExperimentConfig, Field};
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] seedbank::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(seedbank::Error::InvalidParameter { .. }) => 2,
            CliError::Core(seedbank::Error::Regime(_)) => 3,
            CliError::Core(seedbank::Error::Resource(_)) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "seedbank", version, about = "Wright-Fisher model with a seed bank: renewal sequences, coalescence times, urn chains and forward genealogies")]
#[command(after_help = "Exit codes: 0 success, 1 I/O error, 2 config error, 3 formula outside its regime, 4 resource limit.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Renewal sequence q_0..q_H.
    ///
    /// Needs: distribution, horizon.
    /// Writes renewal.csv (n,q_n) and renewal.json.
    RenewalSeq(RunArgs),
    /// Coalescence time of a sample (pair by default).
    ///
    /// Needs: distribution, population, horizon, replicates, seed; optional sample_size.
    /// Writes tmrca.csv (replicate,outcome,tau_or_horizon) and tmrca.json.
    Tmrca(RunArgs),
    /// Pair no-coalescence curve P(tau > N t) against exp(-beta^2 t).
    ///
    /// Needs: distribution, population, times, replicates, seed.
    /// Writes survival.csv (t,estimate,stderr,lower,upper,kingman) and survival.json.
    KingmanSurvival(RunArgs),
    /// Exact stationarity check of the urn chain for a finitely supported distribution.
    ///
    /// Needs: distribution (finite support or with truncate), sample_size; optional replicates and seed
    /// for a first-urn goodness-of-fit check. Writes stationarity.json.
    UrnStationarity(RunArgs),
    /// Stationary single-merger rate against the average leading term.
    ///
    /// Needs: distribution, population, sample_size, replicates, seed; optional horizon for a
    /// sectioned-chain trajectory. Writes merger_rate.json and trajectory.csv
    /// (step,first_urn,balls,mergers).
    MergerRate(RunArgs),
    /// Covariances and correlations of the type frequency process.
    ///
    /// Needs: distribution, population, depth, burn_in, p, lags, replicates, seed, horizon.
    /// Writes correlation.json and frequency.csv (generation,y).
    ForwardCorr(RunArgs),
    /// Partial sums and cross sums of q against their Tauberian asymptotes.
    ///
    /// Needs: distribution (power law, 0 < alpha < 1), horizon, lags.
    /// Writes tauberian.csv (i,partial_sum,partial_asymptote,partial_ratio,cross_sum,
    /// cross_asymptote,cross_ratio,cross_leading_term,cross_leading_ratio) and tauberian.json.
    Tauberian(RunArgs),
    /// Checks a config and prints a JSON report of missing fields, violations and warnings.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Subcommand whose required fields are checked; default: distribution and seed.
        #[arg(long)]
        command: Option<String>,
    },
}

#[derive(Serialize)]
struct ValidationReport {
    missing: Vec<&'static str>,
    violations: Vec<String>,
    warnings: Vec<String>,
}

fn validate(path: &PathBuf, command: Option<&str>) -> Result<bool, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    let required = match command {
        Some(c) => commands::required_fields(c).ok_or_else(|| CliError::Config(format!("unknown command {c}")))?,
        None => &[Field::Distribution, Field::Seed][..],
    };
    let report = ValidationReport { missing: cfg.missing(required), violations: cfg.violations(), warnings: cfg.warnings() };
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(report.missing.is_empty() && report.violations.is_empty())
}

type Runner = fn(&ExperimentConfig, &mut Output) -> Result<(), CliError>;

fn run(name: &'static str, args: &RunArgs, runner: Runner) -> Result<(), CliError> {
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Config("threads: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Config("missing output directory: pass --out or set output".into()))?;
    let mut out = Output::new(dir, name, &cfg)?;
    runner(&cfg, &mut out)?;
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RenewalSeq(a) => run("renewal-seq", a, commands::renewal_seq),
        Command::Tmrca(a) => run("tmrca", a, commands::tmrca),
        Command::KingmanSurvival(a) => run("kingman-survival", a, commands::kingman_survival),
        Command::UrnStationarity(a) => run("urn-stationarity", a, commands::urn_stationarity),
        Command::MergerRate(a) => run("merger-rate", a, commands::merger_rate),
        Command::ForwardCorr(a) => run("forward-corr", a, commands::forward_corr),
        Command::Tauberian(a) => run("tauberian", a, commands::tauberian),
        Command::Validate { config, command } => match validate(config, command.as_deref()) {
            Ok(true) => return ExitCode::SUCCESS,
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
