//! Execution of a resolved [`RunConfig`].

use std::fmt::Write as _;
use std::path::Path;

use novas::backtest::{relative_report, run_rolling_poos, BacktestConfig, BacktestReport, MethodDescriptor};
use novas::calibrate::{calibrate, CalibrationGrid};
use novas::garch::{fit_garch11_mle, garch_bootstrap_ensemble, garch_direct_forecast};
use novas::innovations::{InnovationSource, Seed};
use novas::predictor::{mean, predict, ForecastRequest, Risk, Statistic};
use novas::returns::{load_price_csv, load_return_csv, to_log_returns, ReturnSeries};
use novas::simgen::generate;
use novas::weights::{NovasVariant, NovasWeights};
use novas::NovasError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ForecastJob, ForecastMethodKind, InputSpec, Job, RunConfig};
use crate::error::CliError;
use crate::output::{cell, to_json, write_atomic, write_sidecar};

pub const BACKTEST_COLUMNS: &str = "method,variant,alpha,risk,innovation-kind,horizon,score,ratio,n_predictions";
pub const PAIR_COLUMNS: &str = "method,variant,alpha,risk,innovation-kind,horizon,window,prediction,truth";

/// Runs the job on a pool of `cfg.threads` workers and writes its artifacts.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.threads == 0 {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| dispatch(cfg))
}

fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    let output = cfg.output.as_deref();
    match &cfg.job {
        Job::Simulate { spec } => {
            let y = generate(spec)?;
            let out = output.expect("resolved");
            write_atomic(out, returns_csv(&y).as_bytes())?;
        }
        Job::Calibrate {
            input,
            variants,
            alpha_grid,
            grid,
        } => {
            let y = load_input(input)?;
            let records = calibration_records(&y, variants, alpha_grid, grid);
            write_atomic(output.expect("resolved"), to_json(&records).as_bytes())?;
        }
        Job::Forecast(job) => {
            let y = load_input(&job.input)?;
            let record = forecast(&y, job)?;
            write_atomic(output.expect("resolved"), to_json(&record).as_bytes())?;
        }
        Job::Backtest {
            input,
            config,
            label,
            table,
        } => {
            let y = load_input(input)?;
            let report = backtest(&y, config)?;
            let out = output.expect("resolved");
            write_atomic(out, backtest_csv(&report).as_bytes())?;
            write_atomic(&out.with_extension("json"), to_json(&report).as_bytes())?;
            if *table {
                print!("{}", relative_report(&report, label)?);
            }
        }
        Job::Report { input, label } => {
            let report = read_report(input)?;
            let table = relative_report(&report, label)?;
            if let Some(out) = output {
                write_atomic(out, pairs_csv(&report).as_bytes())?;
            }
            print!("{table}");
        }
    }
    if let Some(out) = output {
        write_sidecar(out, cfg)?;
    }
    Ok(())
}

pub fn load_input(input: &InputSpec) -> Result<ReturnSeries, CliError> {
    if !input.path.is_file() {
        return Err(CliError::Read {
            path: input.path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        });
    }
    Ok(if input.prices {
        to_log_returns(&load_price_csv(&input.path, &input.column)?)?
    } else {
        load_return_csv(&input.path, &input.column)?
    })
}

fn returns_csv(y: &ReturnSeries) -> String {
    let mut s = String::from("index,return\n");
    for (i, v) in y.values().iter().enumerate() {
        let _ = writeln!(s, "{},{v}", i + 1);
    }
    s
}

#[derive(Debug, Serialize)]
struct ErrorRecord {
    category: &'static str,
    reason: &'static str,
    message: String,
}

impl From<&NovasError> for ErrorRecord {
    fn from(e: &NovasError) -> Self {
        ErrorRecord {
            category: e.category(),
            reason: e.reason(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CalibrationRecord {
    variant: NovasVariant,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<NovasWeights>,
    /// Weight on `Y_t²` in the studentizing denominator.
    #[serde(skip_serializing_if = "Option::is_none")]
    contemporaneous: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trim_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kurtosis: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorRecord>,
}

fn calibration_records(
    y: &ReturnSeries,
    variants: &[NovasVariant],
    alphas: &[f64],
    grid: &CalibrationGrid,
) -> Vec<CalibrationRecord> {
    let cells: Vec<(NovasVariant, f64)> = variants
        .iter()
        .flat_map(|&v| alphas.iter().map(move |&a| (v, a)))
        .collect();
    cells
        .par_iter()
        .map(|&(variant, alpha)| match calibrate(variant, alpha, y, grid) {
            Ok(ct) => CalibrationRecord {
                variant,
                alpha,
                contemporaneous: Some(ct.weights.contemporaneous()),
                trim_bound: ct.weights.trim_bound(),
                weights: Some(ct.weights),
                kurtosis: Some(ct.kurtosis),
                objective: Some(ct.objective),
                error: None,
            },
            Err(e) => CalibrationRecord {
                variant,
                alpha,
                weights: None,
                contemporaneous: None,
                trim_bound: None,
                kurtosis: None,
                objective: None,
                error: Some(ErrorRecord::from(&e)),
            },
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct ForecastRecord {
    method: ForecastMethodKind,
    variant: Option<NovasVariant>,
    alpha: Option<f64>,
    horizon: usize,
    risk: Option<Risk>,
    statistic: Statistic,
    point: f64,
    ensemble_mean: Option<f64>,
    ensemble_median: Option<f64>,
    #[serde(rename = "M")]
    paths: Option<usize>,
    seed: Seed,
}

fn forecast(y: &ReturnSeries, job: &ForecastJob) -> Result<ForecastRecord, CliError> {
    let mut record = ForecastRecord {
        method: job.method,
        variant: job.variant,
        alpha: job.alpha,
        horizon: job.horizon,
        risk: Some(job.risk),
        statistic: job.statistic,
        point: f64::NAN,
        ensemble_mean: None,
        ensemble_median: None,
        paths: Some(job.paths),
        seed: job.seed,
    };
    if job.horizon == 0 {
        return Err(NovasError::InvalidParameter("horizon must be positive".into()).into());
    }
    match job.method {
        ForecastMethodKind::Novas => {
            let (variant, alpha) = (job.variant.expect("resolved"), job.alpha.expect("resolved"));
            let ct = calibrate(variant, alpha, y, &job.grid)?;
            let source = InnovationSource::for_transform(job.innovations, &ct)?;
            let mut req = ForecastRequest::new(job.horizon, job.paths, job.risk, job.statistic, source, job.seed)?;
            req.freeze_variance = job.freeze_variance;
            let r = predict(&ct, &req)?;
            record.point = r.point;
            record.ensemble_mean = Some(r.ensemble_mean);
            record.ensemble_median = Some(r.ensemble_median);
        }
        ForecastMethodKind::GarchBootstrap => {
            let fit = fit_garch11_mle(y)?;
            let r = garch_bootstrap_ensemble(&fit, job.horizon, job.paths, job.seed)?.summarize(
                job.horizon,
                job.statistic,
                job.risk,
            );
            record.point = r.point;
            record.ensemble_mean = Some(r.ensemble_mean);
            record.ensemble_median = Some(r.ensemble_median);
        }
        ForecastMethodKind::GarchDirect => {
            let fit = fit_garch11_mle(y)?;
            let last = *y.values().last().expect("fit needs data");
            let direct = garch_direct_forecast(&fit, last * last, job.horizon);
            record.point = match job.statistic {
                Statistic::AggregatedSquared => mean(&direct),
                Statistic::SquaredStep => direct[job.horizon - 1],
            };
            record.risk = None;
            record.paths = None;
        }
    }
    Ok(record)
}

fn backtest(y: &ReturnSeries, cfg: &BacktestConfig) -> Result<BacktestReport, CliError> {
    Ok(run_rolling_poos(y, cfg)?)
}

fn method_cells(m: &MethodDescriptor) -> String {
    format!(
        "{},{},{},{},{}",
        m.method_tag(),
        cell(m.variant().map(|v| v.tag())),
        cell(m.alpha()),
        cell(m.risk()),
        cell(m.innovations()),
    )
}

fn backtest_csv(report: &BacktestReport) -> String {
    let mut s = format!("{BACKTEST_COLUMNS}\n");
    for sc in &report.scores {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            method_cells(&sc.method),
            sc.horizon,
            sc.score,
            cell(sc.ratio),
            sc.n_predictions
        );
    }
    s
}

fn pairs_csv(report: &BacktestReport) -> String {
    let mut s = format!("{PAIR_COLUMNS}\n");
    for (m, h, w, p, t) in report.pairs() {
        let _ = writeln!(s, "{},{h},{w},{p},{t}", method_cells(&m));
    }
    s
}

fn read_report(path: &Path) -> Result<BacktestReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
