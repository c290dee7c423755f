use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmcmc::harness::{self, RunOptions};
use qmcmc::output::{Manifest, RESOLVED_CONFIG};
use qmcmc::{ExperimentConfig, HarnessError, Result};

/// Exact spectral-gap experiments for quantum-enhanced MCMC.
#[derive(Debug, Parser)]
#[command(name = "qmcmc", version)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "QMCMC_THREADS", default_value_t = 1)]
    threads: usize,
    /// Overrides the config's `base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's `max_dimension`.
    #[arg(long = "max-dim", global = true)]
    max_dim: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gaps over the configured (h, t) grid.
    GapGrid,
    /// Gaps with per-N summaries and exponential fits.
    GapScaling,
    /// Uniform and local classical proposals.
    Baselines,
    /// Window-averaged IPR and its scaling exponent.
    IprScan,
    /// Exact Ising-chain gaps and the analytic bound.
    IsingBound,
    /// Finite-time gap traces at the extreme long-time fields.
    TimeTrace,
    /// Bottleneck bounds on energy-threshold cuts.
    Cuts,
    /// Summaries and fits from an existing run directory.
    Fit {
        /// Directory holding `gaps.csv`; defaults to `--out`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli, fallback: Option<PathBuf>) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .clone()
        .or(fallback)
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut config = ExperimentConfig::from_path(&path)?;
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    if let Some(max_dim) = cli.max_dim {
        config.max_dimension = max_dim;
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<Manifest> {
    let fit_input = match &cli.command {
        Command::Fit { input } => input.clone().or_else(|| cli.out.clone()),
        _ => None,
    };
    let config = load_config(cli, fit_input.as_ref().map(|d| d.join(RESOLVED_CONFIG)))?;
    let out = config
        .output
        .clone()
        .ok_or_else(|| HarnessError::Config("no output directory: pass --out or set `output`".into()))?;
    let opts = RunOptions::new(out, cli.threads);
    match &cli.command {
        Command::GapGrid => harness::run_gap_grid(&config, &opts),
        Command::GapScaling => harness::run_gap_scaling(&config, &opts),
        Command::Baselines => harness::run_baselines(&config, &opts),
        Command::IprScan => harness::run_ipr_scan(&config, &opts),
        Command::IsingBound => harness::run_ising_bound(&config, &opts),
        Command::TimeTrace => harness::run_time_trace(&config, &opts),
        Command::Cuts => harness::run_cuts(&config, &opts),
        Command::Fit { .. } => {
            let input = fit_input.unwrap_or_else(|| opts.out.clone());
            harness::run_fit(&config, &input, &opts)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) if manifest.failures > 0 => {
            log::error!("{} work units failed", manifest.failures);
            ExitCode::from(3)
        }
        Ok(manifest) => {
            log::info!("done in {:.1} s", manifest.wall_time_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
