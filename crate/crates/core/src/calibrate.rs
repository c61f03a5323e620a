//! Kurtosis-targeted calibration of NoVaS weights over a parameter grid.
//!
//! For a fixed `alpha` the free shape parameters are searched exhaustively and
//! the feasible point whose residuals have kurtosis closest to 3 wins. Ties
//! go to the smaller order, then the smaller contemporaneous weight, then the
//! earlier grid point, so the result never depends on evaluation order.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NovasError, Result};
use crate::returns::{sample_kurtosis, ReturnSeries, RunningStats, VarianceAccumulator};
use crate::transform::{forward_into, EPS_GUARD};
use crate::weights::{build_weights, NovasVariant, NovasWeights, Shape};

/// Shortest window a transform is calibrated on.
pub const MIN_CALIBRATION_LEN: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationGrid {
    /// Decay rates searched for the exponential family.
    pub ge_c_values: Vec<f64>,
    /// Spacing of the a1 and b1 grids for the GARCH family, `step..1`.
    pub ga_step: f64,
    /// Upper bound on the lag order before escalation.
    pub order_cap: usize,
    /// The order is also capped at `window / order_window_divisor`.
    pub order_window_divisor: usize,
    /// Exponential-family order is the smallest `p` whose neglected weight
    /// mass falls below this fraction.
    pub tail_mass: f64,
    /// Ceiling for order escalation when no point satisfies the trim bound.
    pub order_max: usize,
    /// Guard on `1 - k·w²` during inverse simulation.
    pub eps_guard: f64,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        Self {
            ge_c_values: log_spaced(0.005, 5.0, 40),
            ga_step: 0.02,
            order_cap: 30,
            order_window_divisor: 5,
            tail_mass: 0.01,
            order_max: 60,
            eps_guard: EPS_GUARD,
        }
    }
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

impl CalibrationGrid {
    /// Same defaults with a different a1/b1 spacing.
    pub fn with_ga_step(step: f64) -> Self {
        Self {
            ga_step: step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NovasError::InvalidParameter(m.to_string()));
        if self.ge_c_values.is_empty() || self.ge_c_values.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return bad("ge_c_values must be a nonempty list of finite values >= 0");
        }
        if !(self.ga_step > 0.0 && self.ga_step < 1.0) {
            return bad("ga_step must be in (0, 1)");
        }
        if self.order_cap == 0 || self.order_window_divisor == 0 || self.order_max == 0 {
            return bad("order caps must be positive");
        }
        if !(self.tail_mass > 0.0 && self.tail_mass < 1.0) {
            return bad("tail_mass must be in (0, 1)");
        }
        if !(self.eps_guard > 0.0) {
            return bad("eps_guard must be positive");
        }
        Ok(())
    }

    /// `step, 2·step, …` strictly below 1.
    pub fn ga_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 1u32;
        loop {
            let v = (f64::from(k) * self.ga_step * 1e12).round() / 1e12;
            if v >= 1.0 - 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        out
    }

    /// Order cap for a calibration window of length `n`.
    pub fn order_cap_for(&self, n: usize) -> usize {
        self.order_cap.min(n / self.order_window_divisor).max(1)
    }

    /// Smallest `p ≥ 1` with `exp(-c(p+1)) < tail_mass`, capped at `cap`.
    pub fn adaptive_order(&self, c: f64, cap: usize) -> usize {
        if c <= 0.0 {
            return cap;
        }
        let mut p = 1;
        while p < cap && (-c * (p + 1) as f64).exp() >= self.tail_mass {
            p += 1;
        }
        p
    }
}

/// A fitted transform: weights, residuals and the history they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedTransform {
    pub variant: NovasVariant,
    pub weights: NovasWeights,
    pub residuals: Vec<f64>,
    pub history: ReturnSeries,
    pub s2_n: f64,
    pub kurtosis: f64,
    /// Achieved `|KURT(W) - 3|`.
    pub objective: f64,
    pub eps_guard: f64,
}

struct Scored {
    index: usize,
    objective: f64,
    kurtosis: f64,
}

fn shape_candidates(
    variant: NovasVariant,
    alpha: f64,
    grid: &CalibrationGrid,
    orders: &[usize],
) -> Vec<NovasWeights> {
    if variant.is_garch_family() {
        let q = orders[0];
        let values = grid.ga_values();
        let a1_values: Vec<f64> = if variant.has_a0() { values.clone() } else { vec![1.0] };
        let mut out = Vec::with_capacity(a1_values.len() * values.len());
        for &a1 in &a1_values {
            for &b1 in &values {
                if let Ok(w) = build_weights(variant, alpha, Shape::Geometric { a1, b1 }, q) {
                    out.push(w);
                }
            }
        }
        out
    } else {
        grid.ge_c_values
            .iter()
            .zip(orders)
            .filter_map(|(&c, &p)| build_weights(variant, alpha, Shape::Exponential { c }, p).ok())
            .collect()
    }
}

fn score_candidates(y: &[f64], candidates: &[NovasWeights]) -> Vec<Scored> {
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let stats = RunningStats::new(y);
    candidates
        .par_iter()
        .enumerate()
        .map_init(Vec::new, |buf, (index, w)| {
            forward_into(y, &y2, &stats, w, buf).ok()?;
            let kurtosis = sample_kurtosis(buf).ok()?;
            kurtosis.is_finite().then(|| Scored {
                index,
                objective: (kurtosis - 3.0).abs(),
                kurtosis,
            })
        })
        .flatten()
        .collect()
}

fn tie_break(a: &Scored, b: &Scored, candidates: &[NovasWeights]) -> Ordering {
    let (wa, wb) = (&candidates[a.index], &candidates[b.index]);
    a.objective
        .total_cmp(&b.objective)
        .then(wa.order.cmp(&wb.order))
        .then(wa.contemporaneous().total_cmp(&wb.contemporaneous()))
        .then(a.index.cmp(&b.index))
}

/// Fits the variant's free shape parameters for a fixed `alpha`.
///
/// The exponential family uses one adaptive order per decay rate; when no
/// rate yields an admissible contemporaneous weight, every order is doubled
/// (up to `order_max`) and the search repeated. GARCH-family points with an
/// inadmissible solved a0 are simply dropped.
pub fn calibrate(
    variant: NovasVariant,
    alpha: f64,
    y: &ReturnSeries,
    grid: &CalibrationGrid,
) -> Result<CalibratedTransform> {
    grid.validate()?;
    let values = y.values();
    let n = values.len();
    if n < MIN_CALIBRATION_LEN {
        return Err(NovasError::InsufficientData(format!(
            "calibration needs at least {MIN_CALIBRATION_LEN} returns, got {n}"
        )));
    }
    let moments = VarianceAccumulator::from_slice(values);
    if moments.variance() <= 0.0 {
        return Err(NovasError::ZeroVariance);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(NovasError::InvalidParameter(format!("alpha = {alpha} not in (0, 1)")));
    }

    // forward transform needs n > order + 2
    let order_ceiling = grid.order_max.min(n - 3);
    let cap = grid.order_cap_for(n).min(order_ceiling);
    let mut orders: Vec<usize> = if variant.is_garch_family() {
        vec![cap]
    } else {
        grid.ge_c_values.iter().map(|&c| grid.adaptive_order(c, cap)).collect()
    };

    loop {
        let candidates = shape_candidates(variant, alpha, grid, &orders);
        if !candidates.is_empty() {
            let scored = score_candidates(values, &candidates);
            let best = scored
                .into_iter()
                .min_by(|a, b| tie_break(a, b, &candidates))
                .ok_or_else(|| NovasError::NoFeasiblePoint {
                    variant: variant.to_string(),
                    alpha,
                })?;
            let weights = candidates[best.index].clone();
            return finish(variant, weights, y, moments.variance(), best, grid.eps_guard);
        }
        let escalate = variant == NovasVariant::Ge && orders.iter().any(|&p| p < order_ceiling);
        if !escalate {
            return Err(NovasError::NoFeasiblePoint {
                variant: variant.to_string(),
                alpha,
            });
        }
        for p in &mut orders {
            *p = (*p * 2).min(order_ceiling);
        }
    }
}

fn finish(
    variant: NovasVariant,
    weights: NovasWeights,
    y: &ReturnSeries,
    s2_n: f64,
    best: Scored,
    eps_guard: f64,
) -> Result<CalibratedTransform> {
    let values = y.values();
    let y2: Vec<f64> = values.iter().map(|v| v * v).collect();
    let mut residuals = Vec::new();
    forward_into(values, &y2, &RunningStats::new(values), &weights, &mut residuals)?;
    if let Some(bound) = weights.trim_bound() {
        let max = residuals.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        assert!(max <= bound, "residual {max} exceeds trim bound {bound}");
    }
    Ok(CalibratedTransform {
        variant,
        weights,
        residuals,
        history: y.clone(),
        s2_n,
        kurtosis: best.kurtosis,
        objective: best.objective,
        eps_guard,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn gaussian(n: usize, seed: u64) -> ReturnSeries {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ReturnSeries::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
    }

    #[test]
    fn default_grid_shape() {
        let g = CalibrationGrid::default();
        assert_eq!(g.ge_c_values.len(), 40);
        assert!((g.ge_c_values[0] - 0.005).abs() < 1e-15);
        assert!((g.ge_c_values[39] - 5.0).abs() < 1e-12);
        let v = g.ga_values();
        assert_eq!(v.len(), 49);
        assert_eq!(v[0], 0.02);
        assert_eq!(v[48], 0.98);
        assert_eq!(CalibrationGrid::with_ga_step(0.05).ga_values().len(), 19);
        assert_eq!(g.order_cap_for(250), 30);
        assert_eq!(g.order_cap_for(100), 20);
    }

    #[test]
    fn adaptive_order_tail_rule() {
        let g = CalibrationGrid::default();
        // exp(-c(p+1)) < 0.01 first at p+1 = 5 for c = 1
        assert_eq!(g.adaptive_order(1.0, 30), 4);
        assert_eq!(g.adaptive_order(5.0, 30), 1);
        assert_eq!(g.adaptive_order(0.005, 30), 30);
        assert_eq!(g.adaptive_order(0.0, 12), 12);
    }

    #[test]
    fn weights_satisfy_constraint_for_every_variant() {
        let y = gaussian(250, 3);
        let grid = CalibrationGrid::with_ga_step(0.05);
        for variant in NovasVariant::ALL {
            let ct = calibrate(variant, 0.5, &y, &grid).unwrap();
            assert!((ct.weights.constraint_sum() - 1.0).abs() < 1e-12);
            assert_eq!(ct.residuals.len(), 250 - ct.weights.order);
            if let Some(b) = ct.weights.trim_bound() {
                assert!(b >= 3.0);
            }
        }
    }

    #[test]
    fn bounded_variants_reduce_excess_kurtosis_of_volatile_input() {
        let grid = CalibrationGrid::with_ga_step(0.05);
        for seed in 0..4 {
            // slowly varying volatility spanning a factor of e^3
            let y: Vec<f64> = gaussian(300, 100 + seed)
                .values()
                .iter()
                .enumerate()
                .map(|(i, z)| z * (1.5 * (i as f64 / 30.0).sin()).exp())
                .collect();
            let y = ReturnSeries::new(y);
            let raw = (sample_kurtosis(y.values()).unwrap() - 3.0).abs();
            assert!(raw > 1.0);
            // residuals of the variants without a0 are studentized ratios and
            // may be heavier tailed than the input
            for variant in [NovasVariant::Ge, NovasVariant::Ga] {
                let ct = calibrate(variant, 0.5, &y, &grid).unwrap();
                assert!(ct.objective < raw, "{variant} seed {seed}: {} vs {raw}", ct.objective);
            }
        }
    }

    #[test]
    fn order_escalates_when_a0_too_large() {
        let grid = CalibrationGrid {
            ge_c_values: vec![0.0],
            order_cap: 5,
            ..CalibrationGrid::default()
        };
        let y = gaussian(200, 9);
        // alpha = 0.1, flat weights: a0 = 0.9/(p+1) needs p >= 8; 5 doubles to 10
        let ct = calibrate(NovasVariant::Ge, 0.1, &y, &grid).unwrap();
        assert_eq!(ct.weights.order, 10);
        assert!(ct.weights.a0 <= 1.0 / 9.0);
    }

    #[test]
    fn infeasible_everywhere_fails() {
        let grid = CalibrationGrid {
            ge_c_values: vec![5.0],
            ..CalibrationGrid::default()
        };
        let y = gaussian(200, 9);
        assert!(matches!(
            calibrate(NovasVariant::Ge, 0.1, &y, &grid),
            Err(NovasError::NoFeasiblePoint { .. })
        ));
    }

    #[test]
    fn degenerate_inputs() {
        let grid = CalibrationGrid::default();
        assert!(calibrate(NovasVariant::Ge, 0.5, &ReturnSeries::new(vec![0.3; 100]), &grid).is_err());
        assert!(matches!(
            calibrate(NovasVariant::Ge, 0.5, &gaussian(40, 1), &grid),
            Err(NovasError::InsufficientData(_))
        ));
    }

    #[test]
    fn calibration_is_deterministic() {
        let y = gaussian(260, 77);
        let grid = CalibrationGrid::default();
        let a = calibrate(NovasVariant::Ga, 0.4, &y, &grid).unwrap();
        let b = calibrate(NovasVariant::Ga, 0.4, &y, &grid).unwrap();
        assert_eq!(a, b);
    }
}
