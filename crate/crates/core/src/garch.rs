//! GARCH(1,1) benchmark: Gaussian quasi-maximum likelihood, direct variance
//! recursion and the volatility bootstrap.

use std::f64::consts::PI;

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NovasError, Result};
use crate::innovations::Seed;
use crate::optim::{Minimum, NelderMead};
use crate::predictor::{Ensemble, ForecastResult, Risk, Statistic};
use crate::returns::{ReturnSeries, VarianceAccumulator};

/// Shortest series a GARCH model is fitted to.
pub const MIN_FIT_LEN: usize = 30;

/// Upper end of α+β reachable by the optimizer; keeps boundary optima
/// (short, trending windows) strictly stationary.
pub const MAX_PERSISTENCE: f64 = 1.0 - 1e-10;

/// `(alpha1, beta1)` of the variance-targeting starting points.
pub const STARTS: [(f64, f64); 5] = [(0.05, 0.90), (0.1, 0.8), (0.1, 0.6), (0.2, 0.5), (0.05, 0.5)];

const MAX_RESTARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl GarchParams {
    pub fn new(omega: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        let p = Self { omega, alpha1, beta1 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.alpha1 >= 0.0 && self.beta1 >= 0.0 && self.alpha1 + self.beta1 < 1.0) {
            return Err(NovasError::InvalidParameter(format!(
                "GARCH parameters outside the stationary region: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.persistence())
    }

    // θ = (ln ω, logit(α+β), logit(α/(α+β)))
    fn from_theta(theta: &[f64]) -> Self {
        let p = logistic(theta[1]).min(MAX_PERSISTENCE);
        let s = logistic(theta[2]);
        Self {
            omega: theta[0].exp(),
            alpha1: p * s,
            beta1: p * (1.0 - s),
        }
    }

    fn to_theta(self) -> [f64; 3] {
        let p = self.persistence();
        [self.omega.ln(), logit(p), logit(self.alpha1 / p)]
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: GarchParams,
    #[serde(skip)]
    pub sigma2_path: Vec<f64>,
    pub loglik: f64,
    pub n: usize,
}

impl GarchFit {
    pub fn last_sigma2(&self) -> f64 {
        *self.sigma2_path.last().expect("fitted path is nonempty")
    }
}

/// Conditional variances `σ²_1..σ²_n` with `σ²_1 = sigma2_1`.
pub fn sigma2_path(y: &[f64], params: &GarchParams, sigma2_1: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut s2 = sigma2_1;
    for t in 0..y.len() {
        if t > 0 {
            s2 = params.omega + params.alpha1 * y[t - 1] * y[t - 1] + params.beta1 * s2;
        }
        out.push(s2);
    }
    out
}

/// Gaussian log-likelihood `-½ Σ [ln 2π + ln σ²_t + Y²_t / σ²_t]`, all
/// observations included.
pub fn loglik(y: &[f64], params: &GarchParams, sigma2_1: f64) -> f64 {
    let ln2pi = (2.0 * PI).ln();
    let mut s2 = sigma2_1;
    let mut acc = 0.0;
    for t in 0..y.len() {
        if t > 0 {
            s2 = params.omega + params.alpha1 * y[t - 1] * y[t - 1] + params.beta1 * s2;
        }
        acc += ln2pi + s2.ln() + y[t] * y[t] / s2;
    }
    -0.5 * acc
}

/// Starting value of the variance recursion: the sample variance.
pub fn initial_variance(y: &[f64]) -> f64 {
    VarianceAccumulator::from_slice(y).variance()
}

pub fn fit_garch11_mle(y: &ReturnSeries) -> Result<GarchFit> {
    let y = y.values();
    if y.len() < MIN_FIT_LEN {
        return Err(NovasError::InsufficientData(format!(
            "GARCH fit needs at least {MIN_FIT_LEN} observations, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(NovasError::InvalidParameter("non-finite return".into()));
    }
    let v = initial_variance(y);
    if !(v > 0.0) {
        return Err(NovasError::ZeroVariance);
    }
    let objective = |theta: &[f64]| -loglik(y, &GarchParams::from_theta(theta), v);
    let nm = NelderMead::default();

    let mut best: Option<Minimum> = None;
    for (a, b) in STARTS {
        let start = GarchParams {
            omega: v * (1.0 - a - b),
            alpha1: a,
            beta1: b,
        };
        let mut m = nm.minimize(objective, &start.to_theta());
        for _ in 0..MAX_RESTARTS {
            if m.converged {
                break;
            }
            let restarted = nm.minimize(objective, &m.x);
            m = if restarted.value <= m.value { restarted } else { Minimum { converged: restarted.converged, ..m } };
        }
        if m.converged && best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| {
        NovasError::Optimizer(format!("no start converged after {MAX_RESTARTS} restarts"))
    })?;
    let params = GarchParams::from_theta(&best.x);
    params.validate().map_err(|_| NovasError::Optimizer(format!("degenerate optimum {params:?}")))?;
    Ok(GarchFit {
        params,
        sigma2_path: sigma2_path(y, &params, v),
        loglik: -best.value,
        n: y.len(),
    })
}

/// `σ²_{n+1..n+h}`: one observed step, then the deterministic recursion.
pub fn garch_direct_forecast(fit: &GarchFit, last_y2: f64, h: usize) -> Vec<f64> {
    let p = &fit.params;
    let mut out = Vec::with_capacity(h);
    let mut s2 = p.omega + p.alpha1 * last_y2 + p.beta1 * fit.last_sigma2();
    for _ in 0..h {
        out.push(s2);
        s2 = p.omega + p.persistence() * s2;
    }
    out
}

/// `paths × h` pseudo returns `σ*·w` with `σ*` drawn i.i.d. from the fitted
/// volatility path and `w` standard normal.
pub fn garch_bootstrap_ensemble(fit: &GarchFit, h: usize, paths: usize, seed: Seed) -> Result<Ensemble> {
    if h == 0 || paths == 0 {
        return Err(NovasError::InvalidParameter("horizon and paths must be positive".into()));
    }
    let sigma: Vec<f64> = fit.sigma2_path.iter().map(|s| s.sqrt()).collect();
    let mut values = vec![0.0; paths * h];
    values.par_chunks_mut(h).enumerate().for_each(|(m, out)| {
        let mut rng = seed.derive(m as u64).rng();
        for slot in out {
            let s = sigma[rng.random_range(0..sigma.len())];
            let w: f64 = rng.sample(StandardNormal);
            *slot = s * w;
        }
    });
    Ok(Ensemble { paths, horizon: h, values })
}

/// Aggregated squared-return forecast from the volatility bootstrap.
pub fn garch_bootstrap_forecast(fit: &GarchFit, h: usize, paths: usize, risk: Risk, seed: Seed) -> Result<ForecastResult> {
    let ens = garch_bootstrap_ensemble(fit, h, paths, seed)?;
    Ok(ens.summarize(h, Statistic::AggregatedSquared, risk))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn simulate(params: &GarchParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s2 = params.unconditional_variance();
        let mut prev: f64 = 0.0;
        (0..n + 200)
            .map(|t| {
                if t > 0 {
                    s2 = params.omega + params.alpha1 * prev * prev + params.beta1 * s2;
                }
                let z: f64 = rng.sample(StandardNormal);
                prev = s2.sqrt() * z;
                prev
            })
            .skip(200)
            .collect()
    }

    fn slow_loglik(y: &[f64], p: &GarchParams, s2_1: f64) -> f64 {
        let s2 = sigma2_path(y, p, s2_1);
        y.iter()
            .zip(&s2)
            .map(|(v, s)| -0.5 * (2.0 * PI * s).ln() - v * v / (2.0 * s))
            .sum()
    }

    #[test]
    fn direct_forecast_hand_recursion() {
        let fit = GarchFit {
            params: GarchParams::new(1e-5, 0.1, 0.73).unwrap(),
            sigma2_path: vec![1.0],
            loglik: 0.0,
            n: 1,
        };
        let f = garch_direct_forecast(&fit, 1.0, 2);
        assert!((f[0] - 0.83001).abs() < 1e-14);
        assert!((f[1] - 0.6889183).abs() < 1e-14);
    }

    #[test]
    fn direct_forecast_collapses_and_converges() {
        let flat = GarchFit {
            params: GarchParams::new(0.3, 0.0, 0.0).unwrap(),
            sigma2_path: vec![5.0],
            loglik: 0.0,
            n: 1,
        };
        assert!(garch_direct_forecast(&flat, 9.0, 6).iter().all(|&v| v == 0.3));

        let p = GarchParams::new(2e-5, 0.15, 0.8).unwrap();
        let target = p.unconditional_variance();
        for start in [1e-6, 1e-2] {
            let fit = GarchFit { params: p, sigma2_path: vec![start], loglik: 0.0, n: 1 };
            let f = garch_direct_forecast(&fit, start, 400);
            let gaps: Vec<f64> = f.iter().map(|v| (v - target).abs()).collect();
            assert!(gaps.windows(2).all(|g| g[1] <= g[0]));
            assert!(f.iter().all(|&v| v > 0.0));
            assert!(gaps[399] < 1e-6 * target);
        }
    }

    #[test]
    fn loglik_matches_definition() {
        let truth = GarchParams::new(1e-5, 0.1, 0.73).unwrap();
        let y = simulate(&truth, 400, 1);
        let v = initial_variance(&y);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a: f64 = rng.random_range(0.0..0.5);
            let b: f64 = rng.random_range(0.0..(0.99 - a));
            let p = GarchParams::new(rng.random_range(1e-7..1e-4), a, b).unwrap();
            let (fast, slow) = (loglik(&y, &p, v), slow_loglik(&y, &p, v));
            assert!((fast - slow).abs() <= 1e-8 * slow.abs());
        }
    }

    #[test]
    fn theta_round_trip() {
        let p = GarchParams::new(3e-5, 0.12, 0.81).unwrap();
        let q = GarchParams::from_theta(&p.to_theta());
        assert!((p.omega - q.omega).abs() < 1e-18 && (p.alpha1 - q.alpha1).abs() < 1e-14 && (p.beta1 - q.beta1).abs() < 1e-14);
    }

    #[test]
    fn fit_recovers_parameters_and_beats_starts() {
        let truth = GarchParams::new(1e-5, 0.1, 0.73).unwrap();
        let y = simulate(&truth, 5000, 11);
        let fit = fit_garch11_mle(&ReturnSeries::new(y.clone())).unwrap();
        assert!((fit.params.alpha1 - 0.1).abs() < 0.05, "{:?}", fit.params);
        assert!((fit.params.beta1 - 0.73).abs() < 0.05, "{:?}", fit.params);
        assert!(fit.params.persistence() < 1.0);
        assert_eq!(fit.sigma2_path.len(), 5000);
        assert!(fit.sigma2_path.iter().all(|&s| s > 0.0));
        let v = initial_variance(&y);
        for (a, b) in STARTS {
            let start = GarchParams::new(v * (1.0 - a - b), a, b).unwrap();
            assert!(fit.loglik >= loglik(&y, &start, v));
        }
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(matches!(
            fit_garch11_mle(&ReturnSeries::new(vec![0.01; 10])),
            Err(NovasError::InsufficientData(_))
        ));
        assert!(matches!(
            fit_garch11_mle(&ReturnSeries::new(vec![0.0; 40])),
            Err(NovasError::ZeroVariance)
        ));
    }

    #[test]
    fn boundary_optimum_stays_stationary() {
        // a 60-point window whose likelihood increases towards alpha1 + beta1 = 1
        let spec = crate::simgen::ModelSpec::new(crate::simgen::Model::M3, 62, Seed(872));
        let y = crate::simgen::generate(&spec).unwrap().window(1, 60);
        let fit = fit_garch11_mle(&y).unwrap();
        assert!(fit.params.persistence() > 0.999);
        assert!(fit.params.persistence() <= MAX_PERSISTENCE);
        fit.params.validate().unwrap();
        assert!(fit.loglik.is_finite());
    }

    #[test]
    fn fit_serializes_summary_only() {
        let truth = GarchParams::new(1e-5, 0.1, 0.73).unwrap();
        let fit = fit_garch11_mle(&ReturnSeries::new(simulate(&truth, 300, 4))).unwrap();
        let json = serde_json::to_value(&fit).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["loglik", "n", "params"]);
    }

    #[test]
    fn bootstrap_constant_volatility_and_mean() {
        let fit = GarchFit {
            params: GarchParams::new(1e-5, 0.1, 0.7).unwrap(),
            sigma2_path: vec![4.0; 50],
            loglik: 0.0,
            n: 50,
        };
        let ens = garch_bootstrap_ensemble(&fit, 3, 20_000, Seed(1)).unwrap();
        // every |Y*| / |w| equals 2, so Y*² / 4 is chi-square(1)
        let r = ens.summarize(1, Statistic::AggregatedSquared, Risk::L2);
        assert!((r.point / 4.0 - 1.0).abs() < 0.03, "{}", r.point);

        let truth = GarchParams::new(1e-5, 0.1, 0.73).unwrap();
        let fit = fit_garch11_mle(&ReturnSeries::new(simulate(&truth, 500, 9))).unwrap();
        let mean_s2 = fit.sigma2_path.iter().sum::<f64>() / fit.n as f64;
        let r = garch_bootstrap_forecast(&fit, 1, 20_000, Risk::L2, Seed(2)).unwrap();
        assert!((r.point / mean_s2 - 1.0).abs() < 0.03, "{} vs {mean_s2}", r.point);
    }

    #[test]
    fn bootstrap_seed_behaviour() {
        let truth = GarchParams::new(1e-5, 0.1, 0.73).unwrap();
        let fit = fit_garch11_mle(&ReturnSeries::new(simulate(&truth, 500, 3))).unwrap();
        let a = garch_bootstrap_forecast(&fit, 5, 5000, Risk::L2, Seed(1)).unwrap();
        let b = garch_bootstrap_forecast(&fit, 5, 5000, Risk::L2, Seed(1)).unwrap();
        let c = garch_bootstrap_forecast(&fit, 5, 5000, Risk::L2, Seed(2)).unwrap();
        assert_eq!(a, b);
        assert!((a.point - c.point).abs() / a.point < 0.05);
    }
}
