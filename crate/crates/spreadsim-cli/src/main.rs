//! Command-line front end: survival-curve experiments, spread-option
//! pricing, and reproduction presets with CSV/JSON artifacts.

mod config;
mod output;
mod presets;
mod runs;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spreadsim",
    about = "Coupled Brownian motions with barrier-reflection dependence: survival curves, copulas, and commodity spread-option pricing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival curve of a coupled pair: analytic column (when closed-form)
    /// plus simulated curve with confidence bands, as CSV
    Survival(RunArgs),
    /// Monte Carlo price of the European spread option, as JSON
    Price(RunArgs),
    /// Rebuild the data behind a published figure or table
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Base seed for all substreams
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths
    #[arg(long)]
    paths: Option<u64>,
    /// Grid step in years
    #[arg(long)]
    dt: Option<f64>,
    /// Worker thread cap (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Confidence level in (0, 1)
    #[arg(long)]
    level: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Preset name (fig1..fig10, table2, table3)
    #[arg(long)]
    preset: String,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Exit codes: 0 success, 2 configuration error, 3 internal consistency
/// error, 1 anything else (I/O).
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<spreadsim::Error>() {
            return match e {
                spreadsim::Error::Consistency(_) => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(spreadsim::Error::Config(msg.into()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Survival(args) => with_pool(&args.common, || {
            let cfg = load_config(&args)?;
            let result = runs::run_survival(&cfg)?;
            let path = runs::write_survival(&result, &args.common.out)?;
            println!("wrote {}", path.display());
            Ok(())
        }),
        Command::Price(args) => with_pool(&args.common, || {
            let cfg = load_config(&args)?;
            let report = runs::run_price(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            let path = args.common.out.join("price.json");
            output::write_text(&path, &format!("{text}\n"))?;
            println!("{text}");
            Ok(())
        }),
        Command::Reproduce(args) => with_pool(&args.common, || {
            let overrides = presets::PresetOverrides {
                seed: args.common.seed,
                paths: args.common.paths,
                dt: args.common.dt,
                level: validated_level(args.common.level)?,
            };
            let summary = presets::run_preset(&args.preset, &overrides, &args.common.out)?;
            println!(
                "preset {} wrote {} files to {} in {:.2}s",
                summary.preset,
                summary.outputs.len() + 1,
                args.common.out.display(),
                summary.runtime_seconds
            );
            Ok(())
        }),
    }
}

fn validated_level(level: Option<f64>) -> anyhow::Result<Option<f64>> {
    if let Some(l) = level {
        if !(l > 0.0 && l < 1.0) {
            return Err(config_error(format!(
                "level: must lie strictly inside (0, 1), got {l}"
            )));
        }
    }
    Ok(level)
}

fn load_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = args.common.paths {
        cfg.n_paths = paths;
    }
    if let Some(dt) = args.common.dt {
        cfg.grid.dt = dt;
    }
    if let Some(level) = validated_level(args.common.level)? {
        cfg.level = level;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the work inside a rayon pool capped at --threads; results are
/// independent of the cap because every stream is keyed by path index.
fn with_pool<F>(common: &CommonArgs, f: F) -> anyhow::Result<()>
where
    F: FnOnce() -> anyhow::Result<()> + Send,
{
    match common.threads {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(config_error("threads: must be >= 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building thread pool")?;
            pool.install(f)
        }
    }
}
