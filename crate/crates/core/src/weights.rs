//! Weight structures for the four NoVaS variants.
//!
//! Every variant studentizes `Y_t` by
//! `sqrt(k·Y_t² + α·s²_{t-1} + Σ_i lag_i·Y²_{t-i})`, where the contemporaneous
//! weight `k` is `a0` for the exponential family and `a0 / (1 - b1)` for the
//! GARCH-derived family (zero for the a0-removed variants).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Infeasibility, NovasError, Result};

/// Largest admissible contemporaneous weight: keeps the trim bound
/// `1/sqrt(k)` at or above 3.
pub const CONTEMPORANEOUS_MAX: f64 = 1.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NovasVariant {
    #[serde(rename = "GE")]
    Ge,
    #[serde(rename = "GE_NO_A0")]
    GeNoA0,
    #[serde(rename = "GA")]
    Ga,
    #[serde(rename = "GA_NO_A0")]
    GaNoA0,
}

impl NovasVariant {
    pub const ALL: [NovasVariant; 4] = [
        NovasVariant::Ge,
        NovasVariant::GeNoA0,
        NovasVariant::Ga,
        NovasVariant::GaNoA0,
    ];

    pub fn has_a0(self) -> bool {
        matches!(self, NovasVariant::Ge | NovasVariant::Ga)
    }

    pub fn is_garch_family(self) -> bool {
        matches!(self, NovasVariant::Ga | NovasVariant::GaNoA0)
    }

    pub fn tag(self) -> &'static str {
        match self {
            NovasVariant::Ge => "GE",
            NovasVariant::GeNoA0 => "GE_NO_A0",
            NovasVariant::Ga => "GA",
            NovasVariant::GaNoA0 => "GA_NO_A0",
        }
    }

    /// Column heading used in the relative-performance table.
    pub fn display_name(self) -> &'static str {
        match self {
            NovasVariant::Ge => "GE-NoVaS",
            NovasVariant::GeNoA0 => "GE-NoVaS-without-a0",
            NovasVariant::Ga => "GA-NoVaS",
            NovasVariant::GaNoA0 => "GA-NoVaS-without-a0",
        }
    }
}

impl fmt::Display for NovasVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NovasVariant {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "GE" => Ok(NovasVariant::Ge),
            "GE_NO_A0" => Ok(NovasVariant::GeNoA0),
            "GA" => Ok(NovasVariant::Ga),
            "GA_NO_A0" => Ok(NovasVariant::GaNoA0),
            _ => Err(NovasError::InvalidParameter(format!("unknown variant `{s}`"))),
        }
    }
}

/// Variant-specific shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `a_i ∝ exp(-c·i)`.
    Exponential { c: f64 },
    /// `a_i = a1·b1^(i-1)`.
    Geometric { a1: f64, b1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovasWeights {
    pub variant: NovasVariant,
    pub alpha: f64,
    pub a0: f64,
    /// Lag coefficients, `lags[i]` multiplies `Y²_{t-1-i}`.
    pub lags: Vec<f64>,
    pub order: usize,
    pub shape: Shape,
}

impl NovasWeights {
    /// Computes the coefficients of a weight structure without admissibility
    /// checks (only parameter ranges are validated). For GA the intercept
    /// weight a0 is solved from the variance-stabilizing constraint, and for
    /// GA_NO_A0 the supplied a1 is replaced by the value that makes the
    /// constraint hold.
    pub fn construct(variant: NovasVariant, alpha: f64, shape: Shape, order: usize) -> Result<Self> {
        let out_of_range = |msg: String| NovasError::Infeasible(Infeasibility::OutOfRange(msg));
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(out_of_range(format!("alpha = {alpha} not in (0, 1)")));
        }
        if order == 0 {
            return Err(out_of_range("order must be positive".into()));
        }
        match (variant.is_garch_family(), shape) {
            (false, Shape::Exponential { c }) => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(out_of_range(format!("c = {c} must be finite and >= 0")));
                }
                let first = if variant.has_a0() { 0 } else { 1 };
                let raw: Vec<f64> = (first..=order).map(|i| (-c * i as f64).exp()).collect();
                let scale = (1.0 - alpha) / raw.iter().sum::<f64>();
                let mut coeffs = raw.into_iter().map(|v| v * scale);
                let a0 = if variant.has_a0() { coeffs.next().unwrap() } else { 0.0 };
                Ok(Self {
                    variant,
                    alpha,
                    a0,
                    lags: coeffs.collect(),
                    order,
                    shape,
                })
            }
            (true, Shape::Geometric { a1, b1 }) => {
                if !(b1 > 0.0 && b1 < 1.0) {
                    return Err(out_of_range(format!("b1 = {b1} not in (0, 1)")));
                }
                let geometric_mass = (1.0 - b1.powi(order as i32)) / (1.0 - b1);
                let a1 = if variant.has_a0() {
                    if !(a1 > 0.0 && a1.is_finite()) {
                        return Err(out_of_range(format!("a1 = {a1} must be positive")));
                    }
                    a1
                } else {
                    (1.0 - alpha) / geometric_mass
                };
                let mut lags = Vec::with_capacity(order);
                let mut coeff = a1;
                for _ in 0..order {
                    lags.push(coeff);
                    coeff *= b1;
                }
                let lag_sum: f64 = lags.iter().sum();
                let a0 = if variant.has_a0() {
                    (1.0 - alpha - lag_sum) * (1.0 - b1)
                } else {
                    0.0
                };
                Ok(Self {
                    variant,
                    alpha,
                    a0,
                    lags,
                    order,
                    shape: Shape::Geometric { a1, b1 },
                })
            }
            (_, shape) => Err(out_of_range(format!(
                "shape {shape:?} does not match variant {variant}"
            ))),
        }
    }

    /// Weight on `Y_t²` inside the studentizing denominator.
    pub fn contemporaneous(&self) -> f64 {
        match self.shape {
            Shape::Geometric { b1, .. } => self.a0 / (1.0 - b1),
            Shape::Exponential { .. } => self.a0,
        }
    }

    /// Largest admissible |W|, `1/sqrt(k)`; `None` when the variant has no
    /// contemporaneous term.
    pub fn trim_bound(&self) -> Option<f64> {
        let k = self.contemporaneous();
        (k > 0.0).then(|| 1.0 / k.sqrt())
    }

    /// Left-hand side of the variance-stabilizing constraint (equals 1).
    pub fn constraint_sum(&self) -> f64 {
        self.contemporaneous() + self.alpha + self.lags.iter().sum::<f64>()
    }

    /// Admissibility rules, checked in a fixed order so the reported
    /// violation is deterministic.
    pub fn check_admissible(&self) -> Result<()> {
        if self.a0 < 0.0 {
            return Err(Infeasibility::NegativeA0 { a0: self.a0 }.into());
        }
        let k = self.contemporaneous();
        if k > CONTEMPORANEOUS_MAX {
            return Err(Infeasibility::A0Bound { weight: k }.into());
        }
        if let (NovasVariant::Ga, Shape::Geometric { a1, b1 }) = (self.variant, self.shape) {
            if k < a1 {
                return Err(Infeasibility::Dominance { weight: k, lead: a1 }.into());
            }
            let sum = self.a0 + a1 + b1;
            if sum >= 1.0 {
                return Err(Infeasibility::SumBound { sum }.into());
            }
        }
        Ok(())
    }

    /// `Σ lags[i]·y2[i]` with `y2` newest first.
    #[inline]
    pub fn lag_term(&self, lagged_y2: &[f64]) -> f64 {
        self.lags.iter().zip(lagged_y2).map(|(a, y2)| a * y2).sum()
    }
}

/// Constructs and validates a weight structure.
pub fn build_weights(
    variant: NovasVariant,
    alpha: f64,
    shape: Shape,
    order: usize,
) -> Result<NovasWeights> {
    let w = NovasWeights::construct(variant, alpha, shape, order)?;
    w.check_admissible()?;
    Ok(w)
}
