//! Monte-Carlo / bootstrap prediction through the inverse transform.
//!
//! Each of the `M` paths draws its own innovation vector from a stream
//! derived from `(seed, path index)`, so ensembles are identical regardless
//! of how rayon schedules the paths.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibratedTransform;
use crate::error::{NovasError, Result};
use crate::innovations::{InnovationSource, Seed};
use crate::returns::VarianceAccumulator;
use crate::transform::inverse_with_lag;

/// Smallest ensemble for which a mean/median summary is accepted.
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Risk {
    /// Median of the ensemble.
    L1,
    /// Mean of the ensemble.
    L2,
}

impl Risk {
    pub const ALL: [Risk; 2] = [Risk::L1, Risk::L2];
}

impl fmt::Display for Risk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Risk::L1 => "L1",
            Risk::L2 => "L2",
        })
    }
}

impl FromStr for Risk {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Risk::L1),
            "L2" => Ok(Risk::L2),
            _ => Err(NovasError::InvalidParameter(format!("unknown risk `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Statistic {
    /// `Y²_{n+h}`.
    SquaredStep,
    /// `(1/h) Σ_{k=1..h} Y²_{n+k}`.
    AggregatedSquared,
}

impl Statistic {
    /// Evaluates the statistic on the first `h` values of a path.
    pub fn apply(self, path: &[f64], h: usize) -> f64 {
        match self {
            Statistic::SquaredStep => path[h - 1] * path[h - 1],
            Statistic::AggregatedSquared => path[..h].iter().map(|y| y * y).sum::<f64>() / h as f64,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistic::SquaredStep => "SQUARED_STEP",
            Statistic::AggregatedSquared => "AGGREGATED_SQUARED",
        })
    }
}

impl FromStr for Statistic {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "squared_step" | "step" => Ok(Statistic::SquaredStep),
            "aggregated_squared" | "aggregated" => Ok(Statistic::AggregatedSquared),
            _ => Err(NovasError::InvalidParameter(format!("unknown statistic `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRequest {
    pub horizon: usize,
    pub paths: usize,
    pub risk: Risk,
    pub statistic: Statistic,
    pub source: InnovationSource,
    pub seed: Seed,
    /// Hold `s²_n` fixed instead of folding pseudo returns into it.
    pub freeze_variance: bool,
}

impl ForecastRequest {
    pub fn new(
        horizon: usize,
        paths: usize,
        risk: Risk,
        statistic: Statistic,
        source: InnovationSource,
        seed: Seed,
    ) -> Result<Self> {
        let req = Self {
            horizon,
            paths,
            risk,
            statistic,
            source,
            seed,
            freeze_variance: false,
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(NovasError::InvalidParameter("horizon must be positive".into()));
        }
        if self.paths < MIN_PATHS {
            return Err(NovasError::InvalidParameter(format!(
                "at least {MIN_PATHS} paths required, got {}",
                self.paths
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub point: f64,
    pub ensemble_mean: f64,
    pub ensemble_median: f64,
    pub horizon: usize,
    pub risk: Risk,
    pub statistic: Statistic,
    /// Per-step mean of `Y²_{n+k}`, `k = 1..h`.
    pub step_means: Vec<f64>,
    /// Per-step median of `Y²_{n+k}`.
    pub step_medians: Vec<f64>,
    /// `(1/h) Σ_k step_medians[k]`, the alternative L1 aggregate.
    pub aggregate_of_step_medians: f64,
}

/// Exact median (mean of the two central order statistics for even length).
pub fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of empty slice");
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `paths × horizon` simulated future returns, row-major by path.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub paths: usize,
    pub horizon: usize,
    pub values: Vec<f64>,
}

impl Ensemble {
    pub fn path(&self, m: usize) -> &[f64] {
        &self.values[m * self.horizon..(m + 1) * self.horizon]
    }

    /// Applies `g` to the first `h` steps of every path.
    pub fn path_statistics<G>(&self, h: usize, g: G) -> Vec<f64>
    where
        G: Fn(&[f64]) -> f64,
    {
        assert!(h >= 1 && h <= self.horizon, "horizon {h} outside 1..={}", self.horizon);
        (0..self.paths).map(|m| g(&self.path(m)[..h])).collect()
    }

    /// Risk-optimal predictor of an arbitrary path functional.
    pub fn predict_with<G>(&self, h: usize, risk: Risk, g: G) -> f64
    where
        G: Fn(&[f64]) -> f64,
    {
        let mut stats = self.path_statistics(h, g);
        match risk {
            Risk::L2 => mean(&stats),
            Risk::L1 => median(&mut stats),
        }
    }

    pub fn summarize(&self, h: usize, statistic: Statistic, risk: Risk) -> ForecastResult {
        let mut per_path = self.path_statistics(h, |p| statistic.apply(p, p.len()));
        let ensemble_mean = mean(&per_path);
        let ensemble_median = median(&mut per_path);
        let mut step_means = Vec::with_capacity(h);
        let mut step_medians = Vec::with_capacity(h);
        for k in 1..=h {
            let mut sq = self.path_statistics(k, |p| p[k - 1] * p[k - 1]);
            step_means.push(mean(&sq));
            step_medians.push(median(&mut sq));
        }
        let aggregate_of_step_medians = mean(&step_medians);
        ForecastResult {
            point: match risk {
                Risk::L2 => ensemble_mean,
                Risk::L1 => ensemble_median,
            },
            ensemble_mean,
            ensemble_median,
            horizon: h,
            risk,
            statistic,
            step_means,
            step_medians,
            aggregate_of_step_medians,
        }
    }
}

/// Precomputed state for iterating the inverse transform from the end of
/// the calibration history.
struct PathSimulator<'a> {
    ct: &'a CalibratedTransform,
    /// Lag coefficients oldest-first, to pair with a chronological buffer.
    rev_lags: Vec<f64>,
    /// The last `order` squared history values, chronological.
    tail_y2: Vec<f64>,
    moments: VarianceAccumulator,
    freeze_variance: bool,
}

impl<'a> PathSimulator<'a> {
    fn new(ct: &'a CalibratedTransform, freeze_variance: bool) -> Self {
        let history = ct.history.values();
        let order = ct.weights.order;
        let rev_lags = ct.weights.lags.iter().rev().copied().collect();
        let tail_y2 = history[history.len() - order..].iter().map(|y| y * y).collect();
        Self {
            ct,
            rev_lags,
            tail_y2,
            moments: VarianceAccumulator::from_slice(history),
            freeze_variance,
        }
    }

    fn run(&self, innovations: &[f64], buf: &mut Vec<f64>, out: &mut [f64]) -> Result<()> {
        let w = &self.ct.weights;
        let order = w.order;
        buf.clear();
        buf.extend_from_slice(&self.tail_y2);
        let mut moments = self.moments;
        for (k, &wk) in innovations.iter().enumerate() {
            let recent = &buf[buf.len() - order..];
            let lag: f64 = self.rev_lags.iter().zip(recent).map(|(a, v)| a * v).sum();
            let y = inverse_with_lag(wk, lag, moments.variance(), w, self.ct.eps_guard)?;
            out[k] = y;
            buf.push(y * y);
            if !self.freeze_variance {
                moments.push(y);
            }
        }
        Ok(())
    }
}

/// Pseudo returns `Y*_{n+1..n+h}` for one innovation vector.
pub fn simulate_path(ct: &CalibratedTransform, innovations: &[f64]) -> Result<Vec<f64>> {
    simulate_path_with(ct, innovations, false)
}

pub fn simulate_path_with(
    ct: &CalibratedTransform,
    innovations: &[f64],
    freeze_variance: bool,
) -> Result<Vec<f64>> {
    let sim = PathSimulator::new(ct, freeze_variance);
    let mut out = vec![0.0; innovations.len()];
    sim.run(innovations, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// Simulates `paths` futures of length `horizon`; path `m` uses the stream
/// `seed.derive(m)`.
pub fn simulate_ensemble(
    ct: &CalibratedTransform,
    source: &InnovationSource,
    horizon: usize,
    paths: usize,
    seed: Seed,
    freeze_variance: bool,
) -> Result<Ensemble> {
    if horizon == 0 || paths == 0 {
        return Err(NovasError::InvalidParameter("horizon and paths must be positive".into()));
    }
    let sim = PathSimulator::new(ct, freeze_variance);
    let mut values = vec![0.0; paths * horizon];
    values
        .par_chunks_mut(horizon)
        .enumerate()
        .try_for_each_init(
            || (Vec::new(), vec![0.0; horizon]),
            |(buf, innovations), (m, out)| {
                let mut rng = seed.derive(m as u64).rng();
                source.fill(&mut rng, innovations);
                sim.run(innovations, buf, out)
            },
        )?;
    Ok(Ensemble {
        paths,
        horizon,
        values,
    })
}

/// Optimal L1/L2 predictor of the requested statistic at `req.horizon`.
pub fn predict(ct: &CalibratedTransform, req: &ForecastRequest) -> Result<ForecastResult> {
    req.validate()?;
    let ensemble = simulate_ensemble(ct, &req.source, req.horizon, req.paths, req.seed, req.freeze_variance)?;
    Ok(ensemble.summarize(req.horizon, req.statistic, req.risk))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::calibrate::{calibrate, CalibrationGrid};
    use crate::innovations::InnovationKind;
    use crate::returns::ReturnSeries;
    use crate::transform::inverse_step;
    use crate::weights::NovasVariant;

    fn fitted(variant: NovasVariant) -> CalibratedTransform {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..200)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * (1.0 + 0.5 * ((i as f64) / 20.0).sin())
            })
            .collect();
        calibrate(variant, 0.5, &ReturnSeries::new(y), &CalibrationGrid::with_ga_step(0.05)).unwrap()
    }

    #[test]
    fn one_step_equals_inverse_step() {
        for variant in NovasVariant::ALL {
            let ct = fitted(variant);
            let h = ct.history.values();
            let lagged: Vec<f64> = (1..=ct.weights.order).map(|i| h[h.len() - i].powi(2)).collect();
            let direct = inverse_step(0.8, &lagged, ct.s2_n, &ct.weights).unwrap();
            let path = simulate_path(&ct, &[0.8]).unwrap();
            assert_eq!(path.len(), 1);
            // one-pass and two-pass variances differ in the last bits
            assert!((path[0] - direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn zero_innovations_give_zero_path() {
        let ct = fitted(NovasVariant::Ga);
        assert!(simulate_path(&ct, &[0.0; 12]).unwrap().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn path_is_pure() {
        let ct = fitted(NovasVariant::Ge);
        let w = [0.3, -1.2, 2.0, 0.1, -0.5];
        let a = simulate_path(&ct, &w).unwrap();
        let b = simulate_path(&ct, &w).unwrap();
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn frozen_variance_changes_later_steps_only() {
        let ct = fitted(NovasVariant::GeNoA0);
        let w = [1.5, -2.0, 0.7];
        let live = simulate_path_with(&ct, &w, false).unwrap();
        let frozen = simulate_path_with(&ct, &w, true).unwrap();
        assert_eq!(live[0], frozen[0]);
        assert_ne!(live[2], frozen[2]);
    }

    #[test]
    fn trim_violation_surfaces() {
        let ct = fitted(NovasVariant::Ge);
        let bound = ct.weights.trim_bound().unwrap();
        assert!(matches!(
            simulate_path(&ct, &[0.1, bound * 1.01]),
            Err(NovasError::TrimBound { .. })
        ));
    }

    #[test]
    fn degenerate_pool_collapses_ensemble() {
        let ct = fitted(NovasVariant::GaNoA0);
        let source = InnovationSource::empirical(vec![0.9]).unwrap();
        let req = ForecastRequest::new(7, 200, Risk::L1, Statistic::AggregatedSquared, source, Seed(1)).unwrap();
        let r = predict(&ct, &req).unwrap();
        let single = simulate_path(&ct, &[0.9; 7]).unwrap();
        let expected = Statistic::AggregatedSquared.apply(&single, 7);
        assert!((r.ensemble_mean - expected).abs() <= 1e-12 * expected);
        assert_eq!(r.ensemble_median, expected);
        assert_eq!(r.point, r.ensemble_median);
    }

    #[test]
    fn aggregate_mean_equals_mean_of_step_predictors() {
        let ct = fitted(NovasVariant::Ga);
        let source = InnovationSource::for_transform(InnovationKind::TrimmedNormal, &ct).unwrap();
        let ens = simulate_ensemble(&ct, &source, 10, 500, Seed(3), false).unwrap();
        let r = ens.summarize(10, Statistic::AggregatedSquared, Risk::L2);
        let avg_steps = mean(&r.step_means);
        assert!((r.point - avg_steps).abs() <= 1e-12 * avg_steps.abs().max(1.0));
    }

    #[test]
    fn predictors_lie_within_ensemble() {
        let ct = fitted(NovasVariant::GeNoA0);
        let source = InnovationSource::for_transform(InnovationKind::Empirical, &ct).unwrap();
        let ens = simulate_ensemble(&ct, &source, 5, 301, Seed(8), false).unwrap();
        let stats = ens.path_statistics(5, |p| Statistic::AggregatedSquared.apply(p, 5));
        let lo = stats.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for risk in Risk::ALL {
            let r = ens.summarize(5, Statistic::AggregatedSquared, risk);
            assert!(r.point >= lo && r.point <= hi && r.point >= 0.0);
        }
    }

    #[test]
    fn request_validation() {
        let source = InnovationSource::trimmed_normal(None).unwrap();
        assert!(ForecastRequest::new(1, 99, Risk::L2, Statistic::SquaredStep, source.clone(), Seed(0)).is_err());
        assert!(ForecastRequest::new(0, 100, Risk::L2, Statistic::SquaredStep, source, Seed(0)).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
