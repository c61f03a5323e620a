//! Future innovation draws: trimmed standard normal (Monte Carlo) or i.i.d.
//! resampling of calibrated residuals.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibratedTransform;
use crate::error::{NovasError, Result};

/// Root seed of a reproducible run. Independent streams are split off with
/// [`Seed::derive`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

// splitmix64 finaliser; a bijection on u64
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Sub-seed for stream `index`. For a fixed parent the map is injective:
    /// `parent + (index+1)·γ` is distinct for every index (γ is odd) and the
    /// finaliser is a bijection.
    pub fn derive(self, index: u64) -> Seed {
        Seed(mix64(self.0.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InnovationKind {
    /// Monte Carlo from the standard normal, trimmed to the transform's bound.
    #[serde(rename = "mc")]
    TrimmedNormal,
    /// Bootstrap from the calibrated residuals.
    #[serde(rename = "boot")]
    Empirical,
}

impl InnovationKind {
    pub const ALL: [InnovationKind; 2] = [InnovationKind::TrimmedNormal, InnovationKind::Empirical];

    pub fn tag(self) -> &'static str {
        match self {
            InnovationKind::TrimmedNormal => "mc",
            InnovationKind::Empirical => "boot",
        }
    }
}

impl fmt::Display for InnovationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for InnovationKind {
    type Err = NovasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" | "trimmed_normal" => Ok(InnovationKind::TrimmedNormal),
            "boot" | "empirical" => Ok(InnovationKind::Empirical),
            _ => Err(NovasError::InvalidParameter(format!("unknown innovation kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InnovationSource {
    TrimmedNormal { bound: Option<f64> },
    Empirical { pool: Vec<f64> },
}

impl InnovationSource {
    /// `bound = None` is the plain standard normal. A finite bound must be at
    /// least 3.
    pub fn trimmed_normal(bound: Option<f64>) -> Result<Self> {
        if let Some(b) = bound {
            if !(b >= 3.0) {
                return Err(NovasError::InvalidParameter(format!(
                    "trim bound {b} is below 3"
                )));
            }
        }
        Ok(InnovationSource::TrimmedNormal { bound })
    }

    pub fn empirical(pool: Vec<f64>) -> Result<Self> {
        if pool.is_empty() {
            return Err(NovasError::InvalidParameter("empty residual pool".into()));
        }
        Ok(InnovationSource::Empirical { pool })
    }

    /// The source a calibrated transform predicts with. Trimming only
    /// applies when the transform has a contemporaneous term.
    pub fn for_transform(kind: InnovationKind, ct: &CalibratedTransform) -> Result<Self> {
        match kind {
            InnovationKind::TrimmedNormal => Self::trimmed_normal(ct.weights.trim_bound()),
            InnovationKind::Empirical => Self::empirical(ct.residuals.clone()),
        }
    }

    pub fn kind(&self) -> InnovationKind {
        match self {
            InnovationSource::TrimmedNormal { .. } => InnovationKind::TrimmedNormal,
            InnovationSource::Empirical { .. } => InnovationKind::Empirical,
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            InnovationSource::TrimmedNormal { bound } => {
                for slot in out {
                    *slot = draw_trimmed(rng, *bound).0;
                }
            }
            InnovationSource::Empirical { pool } => {
                for slot in out {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
            }
        }
    }
}

/// One accepted draw and the number of proposals it took.
#[inline]
fn draw_trimmed<R: Rng + ?Sized>(rng: &mut R, bound: Option<f64>) -> (f64, u64) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let z: f64 = rng.sample(StandardNormal);
        match bound {
            Some(b) if z.abs() >= b => continue,
            _ => return (z, attempts),
        }
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(NovasError::InvalidParameter("sample count must be positive".into()));
    }
    Ok(())
}

/// Rejection sampler output together with its proposal count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedSample {
    pub draws: Vec<f64>,
    pub attempts: u64,
}

impl TrimmedSample {
    pub fn acceptance_rate(&self) -> f64 {
        self.draws.len() as f64 / self.attempts as f64
    }
}

pub fn sample_trimmed_normal_with_stats(
    bound: Option<f64>,
    count: usize,
    seed: Seed,
) -> Result<TrimmedSample> {
    check_count(count)?;
    if let Some(b) = bound {
        if !(b > 0.0) {
            return Err(NovasError::InvalidParameter(format!("trim bound {b} must be positive")));
        }
    }
    let mut rng = seed.rng();
    let mut attempts = 0;
    let draws = (0..count)
        .map(|_| {
            let (z, n) = draw_trimmed(&mut rng, bound);
            attempts += n;
            z
        })
        .collect();
    Ok(TrimmedSample { draws, attempts })
}

/// `count` i.i.d. draws from N(0,1) conditioned on `|w| < bound`.
pub fn sample_trimmed_normal(bound: Option<f64>, count: usize, seed: Seed) -> Result<Vec<f64>> {
    Ok(sample_trimmed_normal_with_stats(bound, count, seed)?.draws)
}

/// `count` uniform draws with replacement from `pool`.
pub fn sample_empirical(pool: &[f64], count: usize, seed: Seed) -> Result<Vec<f64>> {
    check_count(count)?;
    let source = InnovationSource::empirical(pool.to_vec())?;
    let mut out = vec![0.0; count];
    source.fill(&mut seed.rng(), &mut out);
    Ok(out)
}
