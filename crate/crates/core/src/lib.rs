//! Model-free volatility prediction with NoVaS transforms.

// negated comparisons are the NaN-rejecting form of range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod calibrate;
pub mod error;
pub mod garch;
pub mod innovations;
pub mod optim;
pub mod predictor;
pub mod returns;
pub mod simgen;
pub mod transform;
pub mod weights;

pub use backtest::{relative_report, run_rolling_poos, score_performance, BacktestConfig, BacktestReport, Family, MethodDescriptor, Metric};
pub use calibrate::{calibrate, CalibratedTransform, CalibrationGrid};
pub use error::{Infeasibility, NovasError, Result};
pub use innovations::{InnovationKind, InnovationSource, Seed};
pub use predictor::{predict, simulate_ensemble, simulate_path, Ensemble, ForecastRequest, ForecastResult, Risk, Statistic};
pub use returns::{PriceSeries, ReturnSeries};
pub use weights::{build_weights, NovasVariant, NovasWeights, Shape};
pub use garch::{fit_garch11_mle, garch_bootstrap_forecast, garch_direct_forecast, GarchFit, GarchParams};
pub use simgen::{generate, Model, ModelSpec};
