use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, NovasError>;

/// Which admissibility rule a weight structure broke.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Infeasibility {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("solved a0 = {a0} is negative")]
    NegativeA0 { a0: f64 },
    #[error("contemporaneous weight {weight} exceeds 1/9 (trim bound below 3)")]
    A0Bound { weight: f64 },
    #[error("contemporaneous weight {weight} is smaller than the leading lag {lead}")]
    Dominance { weight: f64, lead: f64 },
    #[error("a0 + a1 + b1 = {sum} is not below 1")]
    SumBound { sum: f64 },
}

#[derive(Debug, Error)]
pub enum NovasError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: invalid value `{value}` ({reason})")]
    InvalidValue {
        row: usize,
        value: String,
        reason: &'static str,
    },
    #[error("row {row}: timestamp `{label}` is not after the previous one")]
    UnorderedTimestamps { row: usize, label: String },
    #[error("fewer than 2 prices")]
    TooFewPrices,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("undefined kurtosis: input has zero variance")]
    ZeroVariance,
    #[error("infeasible weights: {0}")]
    Infeasible(#[from] Infeasibility),
    #[error("degenerate studentizing denominator at t = {t}")]
    DegenerateWindow { t: usize },
    #[error("innovation {w} violates the trimming bound {bound} (denominator {denominator:e})")]
    TrimBound { w: f64, bound: f64, denominator: f64 },
    #[error("no feasible calibration point for {variant} at alpha = {alpha}")]
    NoFeasiblePoint { variant: String, alpha: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("benchmark score is zero at horizon {0}")]
    ZeroBenchmark(usize),
}

impl NovasError {
    /// Short machine-readable category, used by the CLI's one-line errors.
    pub fn category(&self) -> &'static str {
        match self {
            NovasError::Io { .. } => "io",
            NovasError::Csv(_)
            | NovasError::MissingColumn(_)
            | NovasError::InvalidValue { .. }
            | NovasError::UnorderedTimestamps { .. }
            | NovasError::TooFewPrices => "data",
            NovasError::InsufficientData(_) | NovasError::ZeroVariance => "data",
            NovasError::Infeasible(_) | NovasError::NoFeasiblePoint { .. } => "calibration",
            NovasError::DegenerateWindow { .. } | NovasError::TrimBound { .. } => "numeric",
            NovasError::Optimizer(_) => "numeric",
            NovasError::InvalidParameter(_) => "config",
            NovasError::ZeroBenchmark(_) => "report",
        }
    }

    /// Name of the failure within its category.
    pub fn reason(&self) -> &'static str {
        match self {
            NovasError::Io { .. } => "io",
            NovasError::Csv(_) => "csv",
            NovasError::MissingColumn(_) => "missing_column",
            NovasError::InvalidValue { .. } => "invalid_value",
            NovasError::UnorderedTimestamps { .. } => "unordered_timestamps",
            NovasError::TooFewPrices => "too_few_prices",
            NovasError::InsufficientData(_) => "insufficient_data",
            NovasError::ZeroVariance => "zero_variance",
            NovasError::Infeasible(_) => "infeasible",
            NovasError::NoFeasiblePoint { .. } => "no_feasible_point",
            NovasError::DegenerateWindow { .. } => "degenerate_window",
            NovasError::TrimBound { .. } => "trim_bound",
            NovasError::InvalidParameter(_) => "invalid_parameter",
            NovasError::Optimizer(_) => "optimizer",
            NovasError::ZeroBenchmark(_) => "zero_benchmark",
        }
    }
}
