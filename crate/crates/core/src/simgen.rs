//! Synthetic returns from GARCH-type data-generating processes.
//!
//! Time-varying coefficients are evaluated at `g_t = t/n` over the delivered
//! sample `t = 1..n`; burn-in steps use the coefficients at `g = 1/n`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{NovasError, Result};
use crate::innovations::Seed;
use crate::returns::ReturnSeries;

pub const DEFAULT_BURN_IN: usize = 500;

/// Start of the variance recursion when no unconditional variance exists.
pub const FALLBACK_SIGMA2: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchCoefficients {
    pub omega: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "UPPERCASE")]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
    /// Constant-coefficient GARCH(1,1).
    Custom(GarchCoefficients),
}

impl Model {
    pub const BUILTIN: [Model; 8] = [
        Model::M1,
        Model::M2,
        Model::M3,
        Model::M4,
        Model::M5,
        Model::M6,
        Model::M7,
        Model::M8,
    ];

    pub fn default_error(self) -> ErrorDist {
        match self {
            Model::M5 => ErrorDist::StudentT { df: 5.0 },
            _ => ErrorDist::Gaussian,
        }
    }

    /// GARCH coefficients at `g ∈ (0, 1]`; `None` for the EGARCH and GJR
    /// models.
    pub fn garch_coefficients(self, g: f64) -> Option<GarchCoefficients> {
        let c = |omega, alpha1, beta1| Some(GarchCoefficients { omega, alpha1, beta1 });
        match self {
            Model::M1 => c(
                -4.0 * (FRAC_PI_2 * g).sin() + 5.0,
                -(g - 0.3).powi(2) + 0.5,
                0.2 * (FRAC_PI_2 * g).sin() + 0.2,
            ),
            Model::M2 => c(1e-5, 0.1 - 0.05 * g, 0.73 + 0.2 * g),
            Model::M3 | Model::M5 => c(1e-5, 0.1, 0.73),
            Model::M4 => c(1e-5, 0.1, 0.8895),
            Model::Custom(k) => Some(k),
            Model::M6 | Model::M7 | Model::M8 => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Custom(k) => write!(f, "CUSTOM({},{},{})", k.omega, k.alpha1, k.beta1),
            Model::M1 => f.write_str("M1"),
            Model::M2 => f.write_str("M2"),
            Model::M3 => f.write_str("M3"),
            Model::M4 => f.write_str("M4"),
            Model::M5 => f.write_str("M5"),
            Model::M6 => f.write_str("M6"),
            Model::M7 => f.write_str("M7"),
            Model::M8 => f.write_str("M8"),
        }
    }
}

impl FromStr for Model {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let idx = up.strip_prefix('M').and_then(|d| d.parse::<usize>().ok());
        match idx {
            Some(i @ 1..=8) => Ok(Model::BUILTIN[i - 1]),
            _ => Err(NovasError::InvalidParameter(format!("unknown model `{s}` (expected M1..M8)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorDist {
    Gaussian,
    StudentT { df: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    pub error: ErrorDist,
    pub burn_in: usize,
    pub seed: Seed,
    /// Scale Student-t errors to unit variance.
    #[serde(default)]
    pub standardize_t: bool,
}

impl ModelSpec {
    pub fn new(model: Model, n: usize, seed: Seed) -> Self {
        Self {
            model,
            n,
            error: model.default_error(),
            burn_in: DEFAULT_BURN_IN,
            seed,
            standardize_t: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NovasError::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !matches!(self.model, Model::Custom(_)) && self.error != self.model.default_error() {
            return bad(format!("{} has a fixed error distribution", self.model));
        }
        if let ErrorDist::StudentT { df } = self.error {
            if !(df > 2.0) {
                return bad(format!("Student-t degrees of freedom {df} must exceed 2"));
            }
        }
        if let Model::Custom(k) = self.model {
            if !(k.omega > 0.0 && k.alpha1 >= 0.0 && k.beta1 >= 0.0) {
                return bad(format!("invalid custom coefficients {k:?}"));
            }
        }
        Ok(())
    }

    /// Variance of one error draw.
    fn error_variance(&self) -> f64 {
        match self.error {
            ErrorDist::StudentT { df } if !self.standardize_t => df / (df - 2.0),
            _ => 1.0,
        }
    }

    /// Starting point of the recursion: the stationary level where one
    /// exists, [`FALLBACK_SIGMA2`] otherwise. For the EGARCH model the value
    /// is `exp` of the stationary mean of `log σ²`.
    fn initial_sigma2(&self) -> f64 {
        let ev = self.error_variance();
        match self.model {
            Model::M1 | Model::M2 => FALLBACK_SIGMA2,
            Model::M6 => (EGARCH_OMEGA / (1.0 - EGARCH_BETA)).exp(),
            Model::M7 => GJR_OMEGA / (1.0 - 0.5 - 0.5 * ev + 0.25 * ev),
            Model::M8 => GJR_OMEGA / (1.0 - 0.73 - 0.1 * ev - 0.15 * ev),
            m => {
                let k = m.garch_coefficients(1.0).expect("constant GARCH model");
                let persistence = k.alpha1 * ev + k.beta1;
                if persistence < 1.0 {
                    k.omega / (1.0 - persistence)
                } else {
                    FALLBACK_SIGMA2
                }
            }
        }
    }
}

const EGARCH_OMEGA: f64 = 1e-5;
const EGARCH_BETA: f64 = 0.8895;
const EGARCH_SIGN: f64 = 0.1;
const EGARCH_SIZE: f64 = 0.3;
const GJR_OMEGA: f64 = 1e-5;

struct ErrorSampler {
    t: Option<StudentT<f64>>,
    scale: f64,
}

impl ErrorSampler {
    fn new(spec: &ModelSpec) -> Result<Self> {
        match spec.error {
            ErrorDist::Gaussian => Ok(Self { t: None, scale: 1.0 }),
            ErrorDist::StudentT { df } => Ok(Self {
                t: Some(StudentT::new(df).map_err(|e| NovasError::InvalidParameter(e.to_string()))?),
                scale: if spec.standardize_t { ((df - 2.0) / df).sqrt() } else { 1.0 },
            }),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.t {
            None => rng.sample(StandardNormal),
            Some(t) => self.scale * rng.sample(t),
        }
    }
}

/// Exactly `spec.n` returns after discarding `spec.burn_in` values.
pub fn generate(spec: &ModelSpec) -> Result<ReturnSeries> {
    Ok(generate_with_volatility(spec)?.0)
}

/// Returns together with their conditional variances `σ²_1..σ²_n`.
pub fn generate_with_volatility(spec: &ModelSpec) -> Result<(ReturnSeries, Vec<f64>)> {
    spec.validate()?;
    let sampler = ErrorSampler::new(spec)?;
    let mut rng = spec.seed.rng();
    simulate(spec, |_| sampler.draw(&mut rng))
}

/// Runs the recursion with caller-supplied errors `ε_1, ε_2, …` (indexed
/// from the first burn-in step).
pub fn generate_with_innovations<F>(spec: &ModelSpec, eps: F) -> Result<ReturnSeries>
where
    F: FnMut(usize) -> f64,
{
    Ok(simulate(spec, eps)?.0)
}

fn simulate<F>(spec: &ModelSpec, mut eps: F) -> Result<(ReturnSeries, Vec<f64>)>
where
    F: FnMut(usize) -> f64,
{
    spec.validate()?;
    let n = spec.n;
    let total = spec.burn_in + n;
    let mut out = Vec::with_capacity(n);
    let mut vol = Vec::with_capacity(n);
    let e_abs = (2.0 / PI).sqrt();

    let mut sigma2 = spec.initial_sigma2();
    let mut prev_x = 0.0;
    let mut prev_eps = 0.0;
    for step in 0..total {
        let t = step as i64 - spec.burn_in as i64 + 1;
        let g = if t >= 1 { t as f64 / n as f64 } else { 1.0 / n as f64 };
        if step > 0 {
            sigma2 = match spec.model {
                Model::M6 => (EGARCH_OMEGA
                    + EGARCH_BETA * sigma2.ln()
                    + EGARCH_SIGN * prev_eps
                    + EGARCH_SIZE * (prev_eps.abs() - e_abs))
                    .exp(),
                Model::M7 | Model::M8 => {
                    let (beta, alpha, lev) = if spec.model == Model::M7 { (0.5, 0.5, -0.5) } else { (0.73, 0.1, 0.3) };
                    let indicator = if prev_x <= 0.0 { 1.0 } else { 0.0 };
                    GJR_OMEGA + beta * sigma2 + alpha * prev_x * prev_x + lev * indicator * prev_x * prev_x
                }
                m => {
                    let k = m.garch_coefficients(g).expect("GARCH model");
                    k.omega + k.beta1 * sigma2 + k.alpha1 * prev_x * prev_x
                }
            };
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(NovasError::InvalidParameter(format!(
                "{} variance recursion left (0, inf) at step {step}",
                spec.model
            )));
        }
        let e = eps(step);
        let x = sigma2.sqrt() * e;
        if t >= 1 {
            out.push(x);
            vol.push(sigma2);
        }
        prev_x = x;
        prev_eps = e;
    }
    Ok((ReturnSeries::new(out), vol))
}
