//! Forward (studentizing) and inverse NoVaS transforms.

use crate::error::{NovasError, Result};
use crate::returns::RunningStats;
use crate::weights::NovasWeights;

/// Smallest admissible `1 - k·w²` in the inverse step.
pub const EPS_GUARD: f64 = 1e-12;

/// Residuals `W_t` for 1-based `t = order+1..n`.
pub fn forward_transform(y: &[f64], w: &NovasWeights) -> Result<Vec<f64>> {
    if y.len() <= w.order + 2 {
        return Err(NovasError::InsufficientData(format!(
            "forward transform of order {} needs more than {} points, got {}",
            w.order,
            w.order + 2,
            y.len()
        )));
    }
    let stats = RunningStats::new(y);
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mut out = Vec::with_capacity(y.len() - w.order);
    forward_into(y, &y2, &stats, w, &mut out)?;
    Ok(out)
}

/// Allocation-free core of [`forward_transform`]; `y2` and `stats` are
/// precomputed from `y` so grid searches can share them.
pub(crate) fn forward_into(
    y: &[f64],
    y2: &[f64],
    stats: &RunningStats,
    w: &NovasWeights,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    let k = w.contemporaneous();
    let p = w.order;
    for idx in p..y.len() {
        // lags[i] pairs with y2[idx - 1 - i]
        let lag: f64 = w
            .lags
            .iter()
            .zip(y2[idx - p..idx].iter().rev())
            .map(|(a, v)| a * v)
            .sum();
        let denom2 = k * y2[idx] + w.alpha * stats.s2[idx] + lag;
        if !(denom2 > 0.0 && denom2.is_finite()) {
            return Err(NovasError::DegenerateWindow { t: idx + 1 });
        }
        out.push(y[idx] / denom2.sqrt());
    }
    Ok(())
}

/// Next return given a residual draw, the most recent `order` squared returns
/// (newest first) and the current variance estimate. The magnitude is
/// `sqrt(w²·(α·s² + Σ lag·Y²) / (1 - k·w²))`; the sign is that of `w`.
pub fn inverse_step(w_next: f64, lagged_y2: &[f64], s2: f64, w: &NovasWeights) -> Result<f64> {
    if lagged_y2.len() < w.order {
        return Err(NovasError::InvalidParameter(format!(
            "inverse step needs {} lagged values, got {}",
            w.order,
            lagged_y2.len()
        )));
    }
    inverse_with_lag(w_next, w.lag_term(lagged_y2), s2, w, EPS_GUARD)
}

/// Inverse step with a precomputed lag term and an explicit floor `guard`
/// on `1 - k·w²`.
#[inline]
pub(crate) fn inverse_with_lag(
    w_next: f64,
    lag: f64,
    s2: f64,
    w: &NovasWeights,
    guard: f64,
) -> Result<f64> {
    let k = w.contemporaneous();
    let w2 = w_next * w_next;
    let denom = 1.0 - k * w2;
    if k > 0.0 && denom <= guard {
        return Err(NovasError::TrimBound {
            w: w_next,
            bound: 1.0 / k.sqrt(),
            denominator: denom,
        });
    }
    let magnitude = (w2 * (w.alpha * s2 + lag) / denom).sqrt();
    Ok(magnitude.copysign(w_next))
}
