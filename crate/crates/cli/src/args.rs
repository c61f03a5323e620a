use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use novas::backtest::Metric;
use novas::innovations::InnovationKind;
use novas::predictor::{Risk, Statistic};
use novas::simgen::Model;
use novas::weights::NovasVariant;

use crate::config::ForecastMethodKind;

/// NoVaS volatility forecasting: simulate, calibrate, forecast, backtest and
/// report.
#[derive(Debug, Parser)]
#[command(name = "novas", version)]
pub struct Cli {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Replay a previous run from its `.sidecar.json`.
    #[arg(long, global = true, value_name = "FILE")]
    pub from_sidecar: Option<PathBuf>,
    /// Primary output file. A `<output>.sidecar.json` is written beside it.
    #[arg(long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a return series from one of the simulation models.
    Simulate(SimulateArgs),
    /// Calibrate NoVaS transforms over a grid of variants and alphas.
    Calibrate(CalibrateArgs),
    /// Produce one h-step aggregated squared-return forecast.
    Forecast(ForecastArgs),
    /// Rolling pseudo-out-of-sample evaluation of every method.
    Backtest(BacktestArgs),
    /// Render a saved backtest: relative table plus prediction/truth pairs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file to read.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Column holding the values (default `return`, or `close` with --prices).
    #[arg(long)]
    pub column: Option<String>,
    /// Treat the column as prices and convert to percent log-returns.
    #[arg(long)]
    pub prices: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// M1..M8.
    #[arg(long)]
    pub model: Option<Model>,
    /// Number of returns to keep after burn-in.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Rescale Student-t errors to unit variance.
    #[arg(long)]
    pub standardize_t: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated subset of GE, GE_NO_A0, GA, GA_NO_A0.
    #[arg(long, value_delimiter = ',')]
    pub variant: Option<Vec<NovasVariant>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Spacing of the GA (a1, b1) search grid.
    #[arg(long)]
    pub ga_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// novas, garch-bootstrap or garch-direct.
    #[arg(long)]
    pub method: Option<ForecastMethodKind>,
    #[arg(long)]
    pub variant: Option<NovasVariant>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Number of simulated paths M.
    #[arg(long)]
    pub paths: Option<usize>,
    /// l1 (median) or l2 (mean).
    #[arg(long)]
    pub risk: Option<Risk>,
    /// mc (trimmed normal) or boot (residual bootstrap).
    #[arg(long)]
    pub innovations: Option<InnovationKind>,
    /// aggregated or step.
    #[arg(long)]
    pub statistic: Option<Statistic>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ga_step: Option<f64>,
    /// Keep the studentizing variance fixed along simulated paths.
    #[arg(long)]
    pub freeze_variance: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub variant: Option<Vec<NovasVariant>>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub risk: Option<Vec<Risk>>,
    #[arg(long, value_delimiter = ',')]
    pub innovations: Option<Vec<InnovationKind>>,
    /// squared or literal.
    #[arg(long)]
    pub metric: Option<Metric>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ga_step: Option<f64>,
    /// Score each method on all of its own windows instead of the common ones.
    #[arg(long)]
    pub all_windows: bool,
    #[arg(long)]
    pub freeze_variance: bool,
    /// Print the family-best relative table.
    #[arg(long)]
    pub table: bool,
    /// Row label for the table (default: input file stem).
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by `backtest`.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
}
