//! Rolling pseudo-out-of-sample evaluation of NoVaS and GARCH forecasts.
//!
//! Every window start `s` uses `y[s..s+window]` to forecast the aggregated
//! squared return `(1/h) Σ_{k=1..h} Y²_{s+window+k-1}` for each configured
//! horizon. A horizon therefore yields `len - window - h + 1` predictions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate, CalibrationGrid, MIN_CALIBRATION_LEN};
use crate::error::{NovasError, Result};
use crate::garch::{fit_garch11_mle, garch_bootstrap_ensemble, garch_direct_forecast, MIN_FIT_LEN};
use crate::innovations::{InnovationKind, InnovationSource, Seed};
use crate::predictor::{simulate_ensemble, Ensemble, Risk, Statistic, MIN_PATHS};
use crate::returns::ReturnSeries;
use crate::weights::NovasVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Ge,
    GeNoA0,
    Ga,
    GaNoA0,
    GarchBoot,
    GarchDirect,
}

impl Family {
    /// Column order of the relative table.
    pub const ALL: [Family; 6] = [
        Family::Ge,
        Family::GeNoA0,
        Family::Ga,
        Family::GaNoA0,
        Family::GarchBoot,
        Family::GarchDirect,
    ];

    pub fn of_variant(v: NovasVariant) -> Family {
        match v {
            NovasVariant::Ge => Family::Ge,
            NovasVariant::GeNoA0 => Family::GeNoA0,
            NovasVariant::Ga => Family::Ga,
            NovasVariant::GaNoA0 => Family::GaNoA0,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Family::Ge => NovasVariant::Ge.display_name(),
            Family::GeNoA0 => NovasVariant::GeNoA0.display_name(),
            Family::Ga => NovasVariant::Ga.display_name(),
            Family::GaNoA0 => NovasVariant::GaNoA0.display_name(),
            Family::GarchBoot => "GARCH-bootstrap",
            Family::GarchDirect => "GARCH-direct",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ge => "GE",
            Family::GeNoA0 => "GE_NO_A0",
            Family::Ga => "GA",
            Family::GaNoA0 => "GA_NO_A0",
            Family::GarchBoot => "GARCH_BOOT",
            Family::GarchDirect => "GARCH_DIRECT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodDescriptor {
    Novas {
        variant: NovasVariant,
        alpha: f64,
        risk: Risk,
        innovations: InnovationKind,
    },
    GarchBootstrap {
        risk: Risk,
    },
    GarchDirect,
}

impl MethodDescriptor {
    pub fn family(&self) -> Family {
        match self {
            MethodDescriptor::Novas { variant, .. } => Family::of_variant(*variant),
            MethodDescriptor::GarchBootstrap { .. } => Family::GarchBoot,
            MethodDescriptor::GarchDirect => Family::GarchDirect,
        }
    }

    pub fn method_tag(&self) -> &'static str {
        match self {
            MethodDescriptor::Novas { .. } => "novas",
            MethodDescriptor::GarchBootstrap { .. } => "garch_bootstrap",
            MethodDescriptor::GarchDirect => "garch_direct",
        }
    }

    pub fn variant(&self) -> Option<NovasVariant> {
        match self {
            MethodDescriptor::Novas { variant, .. } => Some(*variant),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            MethodDescriptor::Novas { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    pub fn risk(&self) -> Option<Risk> {
        match self {
            MethodDescriptor::Novas { risk, .. } | MethodDescriptor::GarchBootstrap { risk } => Some(*risk),
            MethodDescriptor::GarchDirect => None,
        }
    }

    pub fn innovations(&self) -> Option<InnovationKind> {
        match self {
            MethodDescriptor::Novas { innovations, .. } => Some(*innovations),
            _ => None,
        }
    }
}

impl fmt::Display for MethodDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodDescriptor::Novas {
                variant,
                alpha,
                risk,
                innovations,
            } => write!(f, "{variant}[alpha={alpha},{risk},{innovations}]"),
            MethodDescriptor::GarchBootstrap { risk } => write!(f, "GARCH_BOOT[{risk}]"),
            MethodDescriptor::GarchDirect => f.write_str("GARCH_DIRECT"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `Σ (pred - truth)²`.
    #[default]
    Squared,
    /// `Σ (pred - truth)`.
    Literal,
}

impl Metric {
    pub fn score(self, preds: &[f64], truths: &[f64]) -> Result<f64> {
        if preds.len() != truths.len() || preds.is_empty() {
            return Err(NovasError::InvalidParameter(format!(
                "scoring needs equal nonempty lengths, got {} and {}",
                preds.len(),
                truths.len()
            )));
        }
        let diffs = preds.iter().zip(truths).map(|(p, t)| p - t);
        Ok(match self {
            Metric::Squared => diffs.map(|d| d * d).sum(),
            Metric::Literal => diffs.sum(),
        })
    }

    /// Quantity minimised when selecting a family's best variant.
    pub fn badness(self, score: f64) -> f64 {
        match self {
            Metric::Squared => score,
            Metric::Literal => score.abs(),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Squared => "squared",
            Metric::Literal => "literal",
        })
    }
}

impl FromStr for Metric {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "squared" => Ok(Metric::Squared),
            "literal" => Ok(Metric::Literal),
            _ => Err(NovasError::InvalidParameter(format!("unknown metric `{s}`"))),
        }
    }
}

/// Squared-error performance value.
pub fn score_performance(preds: &[f64], truths: &[f64]) -> Result<f64> {
    Metric::Squared.score(preds, truths)
}

pub const DEFAULT_HORIZONS: [usize; 3] = [1, 5, 30];
pub const DEFAULT_PATHS: usize = 5000;

pub fn default_alpha_grid() -> Vec<f64> {
    (1..=8).map(|i| f64::from(i) / 10.0).collect()
}

/// Every NoVaS variant × `alphas` × risks × innovation kinds, then the GARCH
/// bootstrap per risk, then GARCH-direct.
pub fn standard_methods(
    variants: &[NovasVariant],
    alphas: &[f64],
    risks: &[Risk],
    kinds: &[InnovationKind],
) -> Vec<MethodDescriptor> {
    let mut out = Vec::new();
    for &variant in variants {
        for &alpha in alphas {
            for &risk in risks {
                for &innovations in kinds {
                    out.push(MethodDescriptor::Novas {
                        variant,
                        alpha,
                        risk,
                        innovations,
                    });
                }
            }
        }
    }
    out.extend(risks.iter().map(|&risk| MethodDescriptor::GarchBootstrap { risk }));
    out.push(MethodDescriptor::GarchDirect);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub window: usize,
    pub horizons: Vec<usize>,
    pub methods: Vec<MethodDescriptor>,
    pub alpha_grid: Vec<f64>,
    pub paths: usize,
    pub seed: Seed,
    pub metric: Metric,
    pub grid: CalibrationGrid,
    /// Score every method on the windows where all retained methods
    /// produced a prediction.
    pub common_window: bool,
    pub freeze_variance: bool,
}

impl BacktestConfig {
    /// The full method set over the default α grid and horizons.
    pub fn new(window: usize, seed: Seed) -> Self {
        let alpha_grid = default_alpha_grid();
        Self {
            window,
            horizons: DEFAULT_HORIZONS.to_vec(),
            methods: standard_methods(&NovasVariant::ALL, &alpha_grid, &Risk::ALL, &InnovationKind::ALL),
            alpha_grid,
            paths: DEFAULT_PATHS,
            seed,
            metric: Metric::Squared,
            grid: CalibrationGrid::default(),
            common_window: true,
            freeze_variance: false,
        }
    }

    /// Regenerates `methods` from `alpha_grid` with the standard layout.
    pub fn with_alpha_grid(mut self, alphas: Vec<f64>) -> Self {
        self.methods = standard_methods(&NovasVariant::ALL, &alphas, &Risk::ALL, &InnovationKind::ALL);
        self.alpha_grid = alphas;
        self
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        let bad = |m: String| Err(NovasError::InvalidParameter(m));
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons must be a nonempty set of positive integers".into());
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            return bad("duplicate horizon".into());
        }
        if self.methods.is_empty() {
            return bad("no methods configured".into());
        }
        let mut alphas = self.alpha_grid.iter().copied().chain(self.methods.iter().filter_map(|m| m.alpha()));
        if let Some(a) = alphas.find(|a| !(*a > 0.0 && *a < 1.0)) {
            return bad(format!("alpha {a} outside (0, 1)"));
        }
        if self.paths < MIN_PATHS {
            return bad(format!("at least {MIN_PATHS} paths required, got {}", self.paths));
        }
        if self.window < MIN_CALIBRATION_LEN.max(MIN_FIT_LEN) {
            return bad(format!("window {} is shorter than {MIN_CALIBRATION_LEN}", self.window));
        }
        self.grid.validate()?;
        if self.window >= len || len < self.window + self.max_horizon() {
            return Err(NovasError::InsufficientData(format!(
                "{len} returns cannot hold a window of {} plus horizon {}",
                self.window,
                self.max_horizon()
            )));
        }
        Ok(())
    }
}

/// Predictions for one horizon, indexed `[method][window start]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub horizon: usize,
    pub truths: Vec<f64>,
    pub predictions: Vec<Vec<Option<f64>>>,
    /// Windows every retained method predicted.
    pub common: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: MethodDescriptor,
    pub horizon: usize,
    pub score: f64,
    pub n_predictions: usize,
    /// Score relative to GARCH-direct at the same horizon.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCount {
    pub method: MethodDescriptor,
    pub category: String,
    pub reason: String,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBest {
    pub family: Family,
    pub horizon: usize,
    pub best: MethodScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub window: usize,
    pub series_len: usize,
    pub metric: Metric,
    pub methods: Vec<MethodDescriptor>,
    /// Methods that never produced a prediction; excluded from scoring.
    pub dropped: Vec<MethodDescriptor>,
    pub horizons: Vec<HorizonResult>,
    pub scores: Vec<MethodScore>,
    pub best_per_family: Vec<FamilyBest>,
    pub failures: Vec<FailureCount>,
}

impl BacktestReport {
    pub fn method_index(&self, method: &MethodDescriptor) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }

    pub fn horizon(&self, h: usize) -> Option<&HorizonResult> {
        self.horizons.iter().find(|r| r.horizon == h)
    }

    pub fn score(&self, method: &MethodDescriptor, h: usize) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.horizon == h && &s.method == method)
    }

    pub fn family_best(&self, family: Family, h: usize) -> Option<&MethodScore> {
        self.best_per_family
            .iter()
            .find(|b| b.family == family && b.horizon == h)
            .map(|b| &b.best)
    }

    /// Predictions of `method` at horizon `h` on the scored windows.
    pub fn scored_predictions(&self, method: &MethodDescriptor, h: usize) -> Option<Vec<f64>> {
        let m = self.method_index(method)?;
        let hr = self.horizon(h)?;
        Some(
            hr.predictions[m]
                .iter()
                .zip(&hr.common)
                .filter_map(|(p, &c)| if c { *p } else { None })
                .collect(),
        )
    }

    /// `(method, horizon, window start, prediction, truth)` for every
    /// produced prediction.
    pub fn pairs(&self) -> Vec<(MethodDescriptor, usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for hr in &self.horizons {
            for (m, preds) in hr.predictions.iter().enumerate() {
                for (s, p) in preds.iter().enumerate() {
                    if let Some(p) = p {
                        out.push((self.methods[m], hr.horizon, s, *p, hr.truths[s]));
                    }
                }
            }
        }
        out
    }
}

/// Work shared by methods in one window: one calibration per (variant,
/// alpha), one ensemble per innovation kind, one GARCH fit.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Group {
    Novas(NovasVariant, f64),
    Garch,
}

fn group_of(m: &MethodDescriptor) -> Group {
    match m {
        MethodDescriptor::Novas { variant, alpha, .. } => Group::Novas(*variant, *alpha),
        _ => Group::Garch,
    }
}

struct WindowOutput {
    /// `[method][horizon index]`
    preds: Vec<Vec<Option<f64>>>,
    failures: Vec<(usize, &'static str, &'static str)>,
}

fn ensemble_point(ens: &Ensemble, h: usize, risk: Risk) -> f64 {
    ens.predict_with(h, risk, |p| Statistic::AggregatedSquared.apply(p, p.len()))
}

fn run_window(
    y: &[f64],
    s: usize,
    cfg: &BacktestConfig,
    groups: &[Group],
    method_group: &[usize],
) -> WindowOutput {
    let window = ReturnSeries::new(y[s..s + cfg.window].to_vec());
    let available = y.len() - s - cfg.window;
    let valid: Vec<bool> = cfg.horizons.iter().map(|&h| h <= available).collect();
    let h_sim = cfg.horizons.iter().copied().filter(|&h| h <= available).max().unwrap_or(0);
    let window_seed = cfg.seed.derive(s as u64);
    let nh = cfg.horizons.len();
    let mut preds = vec![vec![None; nh]; cfg.methods.len()];
    let mut failures = Vec::new();
    if h_sim == 0 {
        return WindowOutput { preds, failures };
    }

    for (g, group) in groups.iter().enumerate() {
        let members: Vec<usize> = (0..cfg.methods.len()).filter(|&m| method_group[m] == g).collect();
        let fail_all = |failures: &mut Vec<(usize, &'static str, &'static str)>, e: &NovasError| {
            failures.extend(members.iter().map(|&m| (m, e.category(), e.reason())));
        };
        match *group {
            Group::Novas(variant, alpha) => {
                let ct = match calibrate(variant, alpha, &window, &cfg.grid) {
                    Ok(ct) => ct,
                    Err(e) => {
                        fail_all(&mut failures, &e);
                        continue;
                    }
                };
                for (k, kind) in InnovationKind::ALL.into_iter().enumerate() {
                    let users: Vec<usize> = members
                        .iter()
                        .copied()
                        .filter(|&m| cfg.methods[m].innovations() == Some(kind))
                        .collect();
                    if users.is_empty() {
                        continue;
                    }
                    let seed = window_seed.derive((2 * g + k) as u64);
                    let ens = InnovationSource::for_transform(kind, &ct).and_then(|src| {
                        simulate_ensemble(&ct, &src, h_sim, cfg.paths, seed, cfg.freeze_variance)
                    });
                    match ens {
                        Ok(ens) => {
                            for &m in &users {
                                let risk = cfg.methods[m].risk().expect("NoVaS methods carry a risk");
                                fill(&mut preds[m], &mut failures, m, cfg, &valid, |h| ensemble_point(&ens, h, risk));
                            }
                        }
                        Err(e) => failures.extend(users.iter().map(|&m| (m, e.category(), e.reason()))),
                    }
                }
            }
            Group::Garch => {
                let fit = match fit_garch11_mle(&window) {
                    Ok(f) => f,
                    Err(e) => {
                        fail_all(&mut failures, &e);
                        continue;
                    }
                };
                let last = *window.values().last().expect("nonempty window");
                let direct = garch_direct_forecast(&fit, last * last, h_sim);
                let boot = if members.iter().any(|&m| matches!(cfg.methods[m], MethodDescriptor::GarchBootstrap { .. })) {
                    Some(garch_bootstrap_ensemble(&fit, h_sim, cfg.paths, window_seed.derive((2 * g) as u64)))
                } else {
                    None
                };
                for &m in &members {
                    match cfg.methods[m] {
                        MethodDescriptor::GarchDirect => fill(&mut preds[m], &mut failures, m, cfg, &valid, |h| {
                            direct[..h].iter().sum::<f64>() / h as f64
                        }),
                        MethodDescriptor::GarchBootstrap { risk } => match boot.as_ref().expect("built above") {
                            Ok(ens) => fill(&mut preds[m], &mut failures, m, cfg, &valid, |h| ensemble_point(ens, h, risk)),
                            Err(e) => failures.push((m, e.category(), e.reason())),
                        },
                        MethodDescriptor::Novas { .. } => unreachable!("grouped separately"),
                    }
                }
            }
        }
    }
    WindowOutput { preds, failures }
}

/// Stores `point(h)` for every valid horizon; a non-finite value is a
/// numeric failure and leaves the slot empty.
fn fill<F: Fn(usize) -> f64>(
    slots: &mut [Option<f64>],
    failures: &mut Vec<(usize, &'static str, &'static str)>,
    m: usize,
    cfg: &BacktestConfig,
    valid: &[bool],
    point: F,
) {
    let mut failed = false;
    for (i, &h) in cfg.horizons.iter().enumerate() {
        if !valid[i] {
            continue;
        }
        let v = point(h);
        if v.is_finite() {
            slots[i] = Some(v);
        } else {
            failed = true;
        }
    }
    if failed {
        failures.push((m, "numeric", "non_finite"));
    }
}

pub fn run_rolling_poos(y: &ReturnSeries, cfg: &BacktestConfig) -> Result<BacktestReport> {
    let y = y.values();
    cfg.validate(y.len())?;
    let n = y.len();

    let mut groups: Vec<Group> = Vec::new();
    let method_group: Vec<usize> = cfg
        .methods
        .iter()
        .map(|m| {
            let g = group_of(m);
            groups.iter().position(|x| *x == g).unwrap_or_else(|| {
                groups.push(g);
                groups.len() - 1
            })
        })
        .collect();

    let starts = n - cfg.window;
    let outputs: Vec<WindowOutput> = (0..starts)
        .into_par_iter()
        .map(|s| run_window(y, s, cfg, &groups, &method_group))
        .collect();

    let mut failure_counts: BTreeMap<(usize, &'static str, &'static str), usize> = BTreeMap::new();
    for out in &outputs {
        for &key in &out.failures {
            *failure_counts.entry(key).or_default() += 1;
        }
    }
    let failures = failure_counts
        .into_iter()
        .map(|((m, category, reason), windows)| FailureCount {
            method: cfg.methods[m],
            category: category.to_string(),
            reason: reason.to_string(),
            windows,
        })
        .collect();

    let mut horizons = Vec::with_capacity(cfg.horizons.len());
    for (i, &h) in cfg.horizons.iter().enumerate() {
        let count = n - cfg.window - h + 1;
        let truths = (0..count)
            .map(|s| {
                let future = &y[s + cfg.window..s + cfg.window + h];
                future.iter().map(|v| v * v).sum::<f64>() / h as f64
            })
            .collect();
        let predictions = (0..cfg.methods.len())
            .map(|m| (0..count).map(|s| outputs[s].preds[m][i]).collect())
            .collect();
        horizons.push(HorizonResult {
            horizon: h,
            truths,
            predictions,
            common: vec![true; count],
        });
    }

    let produced: Vec<bool> = (0..cfg.methods.len())
        .map(|m| horizons.iter().any(|hr| hr.predictions[m].iter().any(Option::is_some)))
        .collect();
    let dropped = (0..cfg.methods.len()).filter(|&m| !produced[m]).map(|m| cfg.methods[m]).collect();

    let mut scores = Vec::new();
    for hr in &mut horizons {
        if cfg.common_window {
            for (s, c) in hr.common.iter_mut().enumerate() {
                *c = (0..cfg.methods.len()).all(|m| !produced[m] || hr.predictions[m][s].is_some());
            }
        }
        for m in (0..cfg.methods.len()).filter(|&m| produced[m]) {
            let (p, t): (Vec<f64>, Vec<f64>) = hr.predictions[m]
                .iter()
                .zip(&hr.truths)
                .zip(&hr.common)
                .filter_map(|((p, t), &c)| if c { p.map(|p| (p, *t)) } else { None })
                .unzip();
            if p.is_empty() {
                continue;
            }
            scores.push(MethodScore {
                method: cfg.methods[m],
                horizon: hr.horizon,
                score: cfg.metric.score(&p, &t)?,
                n_predictions: p.len(),
                ratio: None,
            });
        }
    }
    for h in &cfg.horizons {
        let bench = scores
            .iter()
            .find(|s| s.horizon == *h && s.method == MethodDescriptor::GarchDirect)
            .map(|s| s.score);
        if let Some(b) = bench.filter(|b| *b != 0.0) {
            for s in scores.iter_mut().filter(|s| s.horizon == *h) {
                s.ratio = Some(s.score / b);
            }
        }
    }

    let mut best_per_family = Vec::new();
    for &h in &cfg.horizons {
        for family in Family::ALL {
            let best = scores
                .iter()
                .filter(|s| s.horizon == h && s.method.family() == family)
                .min_by(|a, b| cfg.metric.badness(a.score).total_cmp(&cfg.metric.badness(b.score)));
            if let Some(best) = best {
                best_per_family.push(FamilyBest {
                    family,
                    horizon: h,
                    best: best.clone(),
                });
            }
        }
    }

    Ok(BacktestReport {
        window: cfg.window,
        series_len: n,
        metric: cfg.metric,
        methods: cfg.methods.clone(),
        dropped,
        horizons,
        scores,
        best_per_family,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub horizon: usize,
    /// Family-best ratio per column of [`Family::ALL`].
    pub ratios: Vec<Option<f64>>,
    pub best: Vec<Option<MethodDescriptor>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeTable {
    pub rows: Vec<TableRow>,
}

/// Family-best ratios against GARCH-direct, one row per horizon.
pub fn relative_report(report: &BacktestReport, label: &str) -> Result<RelativeTable> {
    let mut rows = Vec::new();
    for hr in &report.horizons {
        let h = hr.horizon;
        let bench = report.score(&MethodDescriptor::GarchDirect, h).ok_or_else(|| {
            NovasError::InvalidParameter(format!("no GARCH-direct score at horizon {h}"))
        })?;
        if bench.score == 0.0 || !bench.score.is_finite() {
            return Err(NovasError::ZeroBenchmark(h));
        }
        let mut ratios = Vec::with_capacity(Family::ALL.len());
        let mut best = Vec::with_capacity(Family::ALL.len());
        for family in Family::ALL {
            let member = report
                .scores
                .iter()
                .filter(|s| s.horizon == h && s.method.family() == family)
                .map(|s| (s.score / bench.score, s.method))
                .min_by(|a, b| report.metric.badness(a.0).total_cmp(&report.metric.badness(b.0)));
            ratios.push(member.map(|m| m.0));
            best.push(member.map(|m| m.1));
        }
        let steps = if h == 1 { "step" } else { "steps" };
        rows.push(TableRow {
            label: if label.is_empty() { format!("{h}{steps}") } else { format!("{label}-{h}{steps}") },
            horizon: h,
            ratios,
            best,
        });
    }
    Ok(RelativeTable { rows })
}

impl fmt::Display for RelativeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(8);
        let col_w = Family::ALL.iter().map(|f| f.display_name().len()).max().unwrap_or(0);
        write!(f, "{:label_w$}", "")?;
        for family in Family::ALL {
            write!(f, "  {:>col_w$}", family.display_name())?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:label_w$}", row.label)?;
            for r in &row.ratios {
                match r {
                    Some(v) => write!(f, "  {v:>col_w$.5}")?,
                    None => write!(f, "  {:>col_w$}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
