//! Command-line front end: Monte Carlo tables, empirical fits, risk-forecast
//! backtests, timing studies, and preset inspection.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use aml_core::harness::{
    self, preset, presets, read_returns, run_backtest, run_empirical, run_monte_carlo,
    run_timing, EmpiricalRequest, ExperimentConfig, ModelId,
};
use aml_core::models::msm::MsmParams;

#[derive(Parser)]
#[command(
    name = "aml",
    version,
    about = "Simulation-based estimation via constrained pseudo-score matching"
)]
struct Cli {
    /// Worker threads (0 = one per core). Outputs are identical for any
    /// thread count.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo accuracy table.
    Mc(McArgs),
    /// Estimate a model on a dataset.
    Fit(FitArgs),
    /// Value-at-risk / expected-shortfall backtest with a particle filter.
    Backtest(BacktestArgs),
    /// Evaluation-cost study across volatility-component counts.
    Timing(TimingArgs),
    /// List built-in experiment presets.
    Presets(PresetArgs),
}

#[derive(Args)]
struct McArgs {
    /// Built-in preset name (see `aml presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON experiment configuration (overrides --preset).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replication-count override (desk-scaling a preset).
    #[arg(long)]
    replications: Option<usize>,
    /// Output directory for the accuracy and raw CSV tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Model id: tobit | msm | stable | garch-sv | probit | gaussian-location.
    #[arg(long)]
    model: String,
    /// Input CSV (single return column, or y/x…/z… columns per model).
    #[arg(long)]
    data: PathBuf,
    /// Demean the series before estimation.
    #[arg(long, default_value_t = false)]
    demean: bool,
    /// Simulation paths per criterion evaluation.
    #[arg(long, default_value_t = 100)]
    paths: usize,
    #[arg(long, default_value_t = 20_240_501)]
    seed: u64,
    /// Estimator: aml | ml.
    #[arg(long, default_value = "aml")]
    estimator: String,
    /// Parametric-bootstrap replications for standard errors (0 = off).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BacktestArgs {
    /// Returns CSV (single column).
    #[arg(long)]
    data: PathBuf,
    /// JSON file with the volatility-model parameters
    /// {m0, gamma_bar, b, sigma, k_bar[, mu]}.
    #[arg(long)]
    params: PathBuf,
    /// Demean the series first.
    #[arg(long, default_value_t = false)]
    demean: bool,
    #[arg(long, default_value_t = 10_000)]
    particles: usize,
    /// Tail levels (repeatable).
    #[arg(long = "alpha", default_values_t = [0.05, 0.01])]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 20_240_501)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TimingArgs {
    /// Component counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [6usize, 8, 10, 12])]
    kbar: Vec<usize>,
    /// Series length.
    #[arg(long, default_value_t = 5000)]
    t: usize,
    /// Simulation paths in the criterion evaluation.
    #[arg(long, default_value_t = 20)]
    paths: usize,
    /// Repeats per measurement.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 20_240_501)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetArgs {
    /// Dump the full JSON of every preset instead of the name list.
    #[arg(long, default_value_t = false)]
    dump: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("failed to size the worker pool")?;
    }
    match cli.command {
        Command::Mc(args) => cmd_mc(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Backtest(args) => cmd_backtest(args),
        Command::Timing(args) => cmd_timing(args),
        Command::Presets(args) => cmd_presets(args),
    }
}

fn cmd_mc(args: McArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).context("parsing experiment configuration")?
    } else if let Some(name) = &args.preset {
        preset(name)?
    } else {
        bail!("either --preset or --config is required");
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }

    let report = run_monte_carlo(&cfg)?;
    std::fs::create_dir_all(&args.out)?;
    let accuracy = args.out.join(format!("{}-accuracy.csv", cfg.preset));
    let raw = args.out.join(format!("{}-replications.csv", cfg.preset));
    harness::write_accuracy_csv(&report, &accuracy)?;
    harness::write_raw_csv(&report, &raw)?;

    println!(
        "{} replications ({} dropped), tables written to {} and {}",
        cfg.replications,
        report.dropped,
        accuracy.display(),
        raw.display()
    );
    for row in &report.rows {
        println!(
            "{:>10} {:>10}  mean {:+.5}  bias {:+.5}  mse {:.6e}  cov {:.3}{}",
            row.estimator,
            row.parameter,
            row.mean,
            row.bias,
            row.mse,
            row.cov,
            row.se_ratio
                .map(|r| format!("  se-ratio {r:.3}"))
                .unwrap_or_default()
        );
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let req = EmpiricalRequest {
        model: ModelId::parse(&args.model)?,
        data_path: args.data.display().to_string(),
        demean: args.demean,
        sim_paths: args.paths,
        seed: args.seed,
        estimator: args.estimator.clone(),
        bootstrap: args.bootstrap,
    };
    let report = run_empirical(&req)?;
    emit_json(&report, args.out.as_deref())
}

fn cmd_backtest(args: BacktestArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.params)
        .with_context(|| format!("reading {}", args.params.display()))?;
    let params: MsmParams = serde_json::from_str(&text).context("parsing model parameters")?;
    let mut returns = read_returns(&args.data.display().to_string())?;
    if args.demean {
        let m = returns.iter().sum::<f64>() / returns.len() as f64;
        for r in returns.iter_mut() {
            *r -= m;
        }
    }
    let report = run_backtest(&params, &returns, args.particles, &args.alphas, args.seed)?;
    emit_json(&report, args.out.as_deref())
}

fn cmd_timing(args: TimingArgs) -> Result<()> {
    let rows = run_timing(&args.kbar, args.t, args.paths, args.repeats, args.seed)?;
    for row in &rows {
        println!(
            "k_bar {:>2}: loglik {}  criterion {:.4e} s",
            row.k_bar,
            row.loglik_secs
                .map(|s| format!("{s:.4e} s"))
                .unwrap_or_else(|| "    (beyond dense guard)".into()),
            row.criterion_secs
        );
    }
    if let Some(path) = &args.out {
        harness::write_timing_csv(&rows, args.seed, path)?;
        println!("timing table written to {}", path.display());
    }
    Ok(())
}

fn cmd_presets(args: PresetArgs) -> Result<()> {
    if args.dump {
        println!("{}", serde_json::to_string_pretty(&presets())?);
    } else {
        for p in presets() {
            println!(
                "{:<14} model {:<18} T {:>6}  R {:>5}  H {:>4}  estimators {:?}",
                p.preset,
                p.model.as_str(),
                p.sample_size,
                p.replications,
                p.sim_paths,
                p.estimators.iter().map(|e| e.as_str()).collect::<Vec<_>>()
            );
        }
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(path) => {
            harness::write_json(value, path)?;
            println!("report written to {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}
