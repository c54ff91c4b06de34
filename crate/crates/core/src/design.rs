//! Design laws with closed-form interval probabilities `P_X[x-h, x+h]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erf;

use crate::error::{Error, Result};

/// Something that can report `P[|X - x| <= h]` at a fixed point `x`.
pub trait IntervalProbability: Send + Sync {
    fn prob(&self, h: f64) -> f64;
}

/// One-dimensional covariate laws used by the shipped processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignLaw {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// Density `(tau + 1)/2 |y - center|^tau` on `[center - 1, center + 1]`,
    /// so that `P[|X - center| <= h] = h^(tau + 1)` for `h <= 1`.
    PowerLaw { center: f64, tau: f64 },
}

impl DesignLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DesignLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            DesignLaw::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            DesignLaw::PowerLaw { center, tau } => center.is_finite() && tau.is_finite() && tau > -1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid design law {self:?}")))
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            DesignLaw::Uniform { low, high } => ((y - low) / (high - low)).clamp(0.0, 1.0),
            DesignLaw::Gaussian { mean, sd } => 0.5 * (1.0 + erf((y - mean) / (sd * std::f64::consts::SQRT_2))),
            DesignLaw::PowerLaw { center, tau } => {
                let r = (y - center).clamp(-1.0, 1.0);
                0.5 + 0.5 * r.signum() * r.abs().powf(tau + 1.0)
            }
        }
    }

    /// `P[|X - x| <= h]`.
    pub fn interval_prob(&self, x: f64, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        match *self {
            DesignLaw::Gaussian { mean, sd } => {
                let k = sd * std::f64::consts::SQRT_2;
                0.5 * (erf((x + h - mean) / k) - erf((x - h - mean) / k))
            }
            _ => (self.cdf(x + h) - self.cdf(x - h)).max(0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DesignLaw::Uniform { low, high } => rng.random_range(low..high),
            DesignLaw::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            DesignLaw::PowerLaw { center, tau } => {
                let u: f64 = rng.random();
                let r = u.powf(1.0 / (tau + 1.0));
                if rng.random::<bool>() {
                    center + r
                } else {
                    center - r
                }
            }
        }
    }

    /// Closed-form interval probability at the point `x`.
    pub fn at(&self, x: f64) -> DesignAt {
        DesignAt { law: self.clone(), x }
    }
}

#[derive(Debug, Clone)]
pub struct DesignAt {
    pub law: DesignLaw,
    pub x: f64,
}

impl IntervalProbability for DesignAt {
    fn prob(&self, h: f64) -> f64 {
        self.law.interval_prob(self.x, h)
    }
}

/// Interval probabilities estimated from independent draws of `|X - x|`.
#[derive(Debug, Clone)]
pub struct EmpiricalDesign {
    sorted: Vec<f64>,
}

impl EmpiricalDesign {
    pub fn from_distances(mut dist: Vec<f64>) -> Result<Self> {
        if dist.is_empty() || dist.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidConfig("need at least one finite nonnegative distance".into()));
        }
        dist.sort_by(f64::total_cmp);
        Ok(Self { sorted: dist })
    }

    pub fn draws(&self) -> usize {
        self.sorted.len()
    }

    /// Binomial standard error of [`IntervalProbability::prob`] at `h`.
    pub fn std_error(&self, h: f64) -> f64 {
        let p = self.prob(h);
        (p * (1.0 - p) / self.sorted.len() as f64).sqrt()
    }
}

impl IntervalProbability for EmpiricalDesign {
    fn prob(&self, h: f64) -> f64 {
        self.sorted.partition_point(|&d| d <= h) as f64 / self.sorted.len() as f64
    }
}
