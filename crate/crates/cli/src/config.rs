//! Resolution of flags, config file, environment and defaults into a fully
//! specified [`RunConfig`], which is also the sidecar payload.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use novas::backtest::{default_alpha_grid, standard_methods, BacktestConfig, Metric, DEFAULT_HORIZONS, DEFAULT_PATHS};
use novas::calibrate::CalibrationGrid;
use novas::innovations::{InnovationKind, Seed};
use novas::predictor::{Risk, Statistic};
use novas::simgen::{Model, ModelSpec};
use novas::weights::NovasVariant;
use novas::NovasError;
use serde::{Deserialize, Serialize};

use crate::args::{BacktestArgs, CalibrateArgs, Command, ForecastArgs, InputArgs, ReportArgs, SimulateArgs};
use crate::error::CliError;

pub const SEED_ENV: &str = "NOVAS_SEED";
pub const DEFAULT_WINDOW: usize = 250;
pub const DEFAULT_SIM_LEN: usize = 500;
pub const DEFAULT_FORECAST_PATHS: usize = DEFAULT_PATHS;

/// A string or a list of strings (config files accept both for list keys).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StrList {
    One(String),
    Many(Vec<String>),
}

impl StrList {
    fn items(&self) -> Vec<&str> {
        match self {
            StrList::One(s) => s.split(',').map(str::trim).collect(),
            StrList::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

/// Keys accepted in a `--config` TOML file. All optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub column: Option<String>,
    pub prices: Option<bool>,
    pub model: Option<String>,
    pub n: Option<usize>,
    pub burn_in: Option<usize>,
    pub standardize_t: Option<bool>,
    pub method: Option<String>,
    pub variant: Option<StrList>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub ga_step: Option<f64>,
    pub horizon: Option<usize>,
    pub horizons: Option<Vec<usize>>,
    pub window: Option<usize>,
    pub paths: Option<usize>,
    pub risk: Option<StrList>,
    pub innovations: Option<StrList>,
    pub statistic: Option<String>,
    pub metric: Option<String>,
    pub freeze_variance: Option<bool>,
    pub all_windows: Option<bool>,
    pub table: Option<bool>,
    pub label: Option<String>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }
}

fn parse<T: FromStr<Err = NovasError>>(s: &str) -> Result<T, CliError> {
    s.parse().map_err(CliError::from)
}

fn parse_list<T: FromStr<Err = NovasError>>(list: &StrList) -> Result<Vec<T>, CliError> {
    list.items().into_iter().map(parse).collect()
}

/// Flag, then config file, then `NOVAS_SEED`, then 0.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<Seed, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(Seed(s));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Seed)
            .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(Seed(0)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethodKind {
    Novas,
    GarchBootstrap,
    GarchDirect,
}

impl FromStr for ForecastMethodKind {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self, NovasError> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "novas" => Ok(Self::Novas),
            "garch-bootstrap" | "garch-boot" => Ok(Self::GarchBootstrap),
            "garch-direct" => Ok(Self::GarchDirect),
            _ => Err(NovasError::InvalidParameter(format!("unknown forecast method `{s}`"))),
        }
    }
}

impl fmt::Display for ForecastMethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Novas => "novas",
            Self::GarchBootstrap => "garch_bootstrap",
            Self::GarchDirect => "garch_direct",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub column: String,
    pub prices: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastJob {
    pub input: InputSpec,
    pub method: ForecastMethodKind,
    pub variant: Option<NovasVariant>,
    pub alpha: Option<f64>,
    pub horizon: usize,
    pub paths: usize,
    pub risk: Risk,
    pub innovations: InnovationKind,
    pub statistic: Statistic,
    pub seed: Seed,
    pub freeze_variance: bool,
    pub grid: CalibrationGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Simulate {
        spec: ModelSpec,
    },
    Calibrate {
        input: InputSpec,
        variants: Vec<NovasVariant>,
        alpha_grid: Vec<f64>,
        grid: CalibrationGrid,
    },
    Forecast(ForecastJob),
    Backtest {
        input: InputSpec,
        config: BacktestConfig,
        label: String,
        table: bool,
    },
    Report {
        input: PathBuf,
        label: String,
    },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub output: Option<PathBuf>,
    pub threads: usize,
    pub job: Job,
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

fn resolve_input(args: &InputArgs, file: &Settings) -> Result<InputSpec, CliError> {
    let path = args
        .input
        .clone()
        .or_else(|| file.input.clone())
        .ok_or_else(|| CliError::Config("missing --input".into()))?;
    let prices = args.prices || file.prices.unwrap_or(false);
    let column = args
        .column
        .clone()
        .or_else(|| file.column.clone())
        .unwrap_or_else(|| if prices { "close" } else { "return" }.to_string());
    Ok(InputSpec { path, column, prices })
}

fn resolve_grid(flag: Option<f64>, file: &Settings) -> CalibrationGrid {
    match flag.or(file.ga_step) {
        Some(step) => CalibrationGrid::with_ga_step(step),
        None => CalibrationGrid::default(),
    }
}

fn resolve_variants(flag: &Option<Vec<NovasVariant>>, file: &Settings) -> Result<Vec<NovasVariant>, CliError> {
    match (flag, &file.variant) {
        (Some(v), _) => Ok(v.clone()),
        (None, Some(list)) => parse_list(list),
        (None, None) => Ok(NovasVariant::ALL.to_vec()),
    }
}

fn simulate_job(a: &SimulateArgs, file: &Settings) -> Result<Job, CliError> {
    let model = match (a.model, &file.model) {
        (Some(m), _) => m,
        (None, Some(s)) => parse::<Model>(s)?,
        (None, None) => return Err(CliError::Config("missing --model".into())),
    };
    let n = a.n.or(file.n).unwrap_or(DEFAULT_SIM_LEN);
    let mut spec = ModelSpec::new(model, n, resolve_seed(a.seed, file.seed)?);
    if let Some(b) = a.burn_in.or(file.burn_in) {
        spec.burn_in = b;
    }
    spec.standardize_t = a.standardize_t || file.standardize_t.unwrap_or(false);
    spec.validate()?;
    Ok(Job::Simulate { spec })
}

fn calibrate_job(a: &CalibrateArgs, file: &Settings) -> Result<Job, CliError> {
    let grid = resolve_grid(a.ga_step, file);
    grid.validate()?;
    Ok(Job::Calibrate {
        input: resolve_input(&a.input, file)?,
        variants: resolve_variants(&a.variant, file)?,
        alpha_grid: a
            .alpha_grid
            .clone()
            .or_else(|| file.alpha_grid.clone())
            .unwrap_or_else(default_alpha_grid),
        grid,
    })
}

fn forecast_job(a: &ForecastArgs, file: &Settings) -> Result<Job, CliError> {
    let method = match (a.method, &file.method) {
        (Some(m), _) => m,
        (None, Some(s)) => parse(s)?,
        (None, None) => ForecastMethodKind::Novas,
    };
    let (variant, alpha) = if method == ForecastMethodKind::Novas {
        let variant = match (a.variant, &file.variant) {
            (Some(v), _) => v,
            (None, Some(list)) => match parse_list::<NovasVariant>(list)?.as_slice() {
                [v] => *v,
                _ => return Err(CliError::Config("forecast takes a single variant".into())),
            },
            (None, None) => return Err(CliError::Config("missing --variant".into())),
        };
        let alpha = a
            .alpha
            .or(file.alpha)
            .ok_or_else(|| CliError::Config("missing --alpha".into()))?;
        (Some(variant), Some(alpha))
    } else {
        (None, None)
    };
    let single = |flag: Option<Risk>, list: &Option<StrList>| -> Result<Risk, CliError> {
        match (flag, list) {
            (Some(r), _) => Ok(r),
            (None, Some(l)) => match parse_list::<Risk>(l)?.as_slice() {
                [r] => Ok(*r),
                _ => Err(CliError::Config("forecast takes a single risk".into())),
            },
            (None, None) => Ok(Risk::L2),
        }
    };
    let innovations = match (a.innovations, &file.innovations) {
        (Some(k), _) => k,
        (None, Some(l)) => match parse_list::<InnovationKind>(l)?.as_slice() {
            [k] => *k,
            _ => return Err(CliError::Config("forecast takes a single innovation kind".into())),
        },
        (None, None) => InnovationKind::TrimmedNormal,
    };
    let statistic = match (a.statistic, &file.statistic) {
        (Some(s), _) => s,
        (None, Some(s)) => parse(s)?,
        (None, None) => Statistic::AggregatedSquared,
    };
    let grid = resolve_grid(a.ga_step, file);
    grid.validate()?;
    Ok(Job::Forecast(ForecastJob {
        input: resolve_input(&a.input, file)?,
        method,
        variant,
        alpha,
        horizon: a.horizon.or(file.horizon).unwrap_or(1),
        paths: a.paths.or(file.paths).unwrap_or(DEFAULT_FORECAST_PATHS),
        risk: single(a.risk, &file.risk)?,
        innovations,
        statistic,
        seed: resolve_seed(a.seed, file.seed)?,
        freeze_variance: a.freeze_variance || file.freeze_variance.unwrap_or(false),
        grid,
    }))
}

fn backtest_job(a: &BacktestArgs, file: &Settings) -> Result<Job, CliError> {
    let input = resolve_input(&a.input, file)?;
    let window = a.window.or(file.window).unwrap_or(DEFAULT_WINDOW);
    let mut cfg = BacktestConfig::new(window, resolve_seed(a.seed, file.seed)?);
    cfg.horizons = a
        .horizons
        .clone()
        .or_else(|| file.horizons.clone())
        .unwrap_or_else(|| DEFAULT_HORIZONS.to_vec());
    cfg.alpha_grid = a.alpha_grid.clone().or_else(|| file.alpha_grid.clone()).unwrap_or_else(default_alpha_grid);
    let risks = match (&a.risk, &file.risk) {
        (Some(r), _) => r.clone(),
        (None, Some(l)) => parse_list(l)?,
        (None, None) => Risk::ALL.to_vec(),
    };
    let kinds = match (&a.innovations, &file.innovations) {
        (Some(k), _) => k.clone(),
        (None, Some(l)) => parse_list(l)?,
        (None, None) => InnovationKind::ALL.to_vec(),
    };
    let variants = resolve_variants(&a.variant, file)?;
    cfg.methods = standard_methods(&variants, &cfg.alpha_grid, &risks, &kinds);
    cfg.paths = a.paths.or(file.paths).unwrap_or(DEFAULT_PATHS);
    cfg.metric = match (a.metric, &file.metric) {
        (Some(m), _) => m,
        (None, Some(s)) => parse(s)?,
        (None, None) => Metric::Squared,
    };
    cfg.grid = resolve_grid(a.ga_step, file);
    cfg.common_window = !(a.all_windows || file.all_windows.unwrap_or(false));
    cfg.freeze_variance = a.freeze_variance || file.freeze_variance.unwrap_or(false);
    let label = a
        .label
        .clone()
        .or_else(|| file.label.clone())
        .unwrap_or_else(|| stem(&input.path));
    Ok(Job::Backtest {
        input,
        config: cfg,
        label,
        table: a.table || file.table.unwrap_or(false),
    })
}

fn report_job(a: &ReportArgs, file: &Settings) -> Result<Job, CliError> {
    let input = a
        .input
        .clone()
        .or_else(|| file.input.clone())
        .ok_or_else(|| CliError::Config("missing --input".into()))?;
    let label = a.label.clone().or_else(|| file.label.clone()).unwrap_or_else(|| stem(&input));
    Ok(Job::Report { input, label })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Builds the resolved configuration of a fresh run.
pub fn resolve(
    command: &Command,
    output: Option<PathBuf>,
    threads: Option<usize>,
    file: &Settings,
) -> Result<RunConfig, CliError> {
    let job = match command {
        Command::Simulate(a) => simulate_job(a, file)?,
        Command::Calibrate(a) => calibrate_job(a, file)?,
        Command::Forecast(a) => forecast_job(a, file)?,
        Command::Backtest(a) => backtest_job(a, file)?,
        Command::Report(a) => report_job(a, file)?,
    };
    let output = output.or_else(|| file.output.clone());
    if output.is_none() && !matches!(job, Job::Report { .. }) {
        return Err(CliError::Config("missing --output".into()));
    }
    Ok(RunConfig {
        version: env!("CARGO_PKG_VERSION").to_string(),
        output,
        threads: threads.or(file.threads).unwrap_or_else(default_threads),
        job,
    })
}
