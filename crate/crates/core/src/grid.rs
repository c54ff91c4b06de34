//! Geometric bandwidth grid, the threshold function `psi` and the realized
//! grid of bandwidths with at least one observation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::LocalView;
use crate::sample::SamplePath;

fn default_q() -> f64 {
    0.9
}
fn default_b() -> f64 {
    1.0
}
fn default_nu() -> f64 {
    2.0
}
fn default_u0() -> f64 {
    1.0
}
fn default_delta0() -> f64 {
    0.1
}
fn default_alpha0() -> f64 {
    2.0
}
fn default_j_max() -> usize {
    60
}

/// Estimation point together with grid, threshold and modulus-floor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_point: Vec<f64>,
    pub h0: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_u0")]
    pub u0: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_alpha0")]
    pub alpha0: f64,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
}

impl GridConfig {
    /// Configuration with the default parameters
    /// (`q = 0.9, b = 1, nu = 2, u0 = 1, delta0 = 0.1, alpha0 = 2, j_max = 60`).
    pub fn new(x_point: Vec<f64>, h0: f64) -> Self {
        Self {
            x_point,
            h0,
            q: default_q(),
            b: default_b(),
            nu: default_nu(),
            u0: default_u0(),
            delta0: default_delta0(),
            alpha0: default_alpha0(),
            j_max: default_j_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.x_point.is_empty() || self.x_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("x_point must be a finite point of dimension >= 1".into()));
        }
        positive("h0", self.h0)?;
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidConfig(format!("q must lie in (0, 1), got {}", self.q)));
        }
        positive("b", self.b)?;
        positive("nu", self.nu)?;
        positive("u0", self.u0)?;
        positive("delta0", self.delta0)?;
        positive("alpha0", self.alpha0)?;
        if self.j_max < 1 {
            return Err(Error::InvalidConfig("j_max must be at least 1".into()));
        }
        Ok(())
    }

    /// `h_j = h0 q^j`.
    pub fn bandwidth(&self, j: usize) -> f64 {
        self.h0 * self.q.powi(j as i32)
    }

    /// `psi(h_j) = 1 + b j log(1/q)`, the closed form of [`psi`] on the grid.
    pub fn psi_at(&self, j: usize) -> f64 {
        1.0 + self.b * (j as f64) * (-self.q.ln())
    }
}

/// `psi(h) = 1 + b log(h0 / h)` for `0 < h <= h0`.
pub fn psi(h: f64, cfg: &GridConfig) -> Result<f64> {
    if !(h > 0.0 && h <= cfg.h0) {
        return Err(Error::BandwidthOutOfRange { h, h0: cfg.h0 });
    }
    Ok(1.0 + cfg.b * (cfg.h0 / h).ln())
}

/// One element of the realized grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Index `j` in the geometric sequence `h0 q^j`.
    pub index: usize,
    pub h: f64,
    /// Occupation time `L(h)`, strictly positive.
    pub l: f64,
    pub psi: f64,
}

impl GridPoint {
    /// Normalized level `(psi(h) / L(h))^{1/2}`.
    pub fn level(&self) -> f64 {
        (self.psi / self.l).sqrt()
    }
}

/// The realized grid `{h_j : L(h_j) > 0}`, in descending bandwidth order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationProfile {
    points: Vec<GridPoint>,
}

impl OccupationProfile {
    pub fn from_points(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::GridEmpty);
        }
        if points.iter().any(|p| !(p.l > 0.0 && p.h > 0.0)) {
            return Err(Error::InvalidConfig("grid points need positive bandwidth and occupation".into()));
        }
        if points.windows(2).any(|w| w[1].h >= w[0].h || w[1].index <= w[0].index) {
            return Err(Error::InvalidConfig("grid points must be strictly descending".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.h).collect()
    }

    pub fn l_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.l).collect()
    }

    pub fn psi_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.psi).collect()
    }

    /// `L(h0)`; the first grid point is always `h0` itself.
    pub fn l_h0(&self) -> f64 {
        self.points[0].l
    }
}

/// Builds the realized grid, stopping at the first empty window or at `j_max`.
pub fn build_grid(sample: &SamplePath, cfg: &GridConfig) -> Result<OccupationProfile> {
    cfg.validate()?;
    let view = LocalView::new(sample, &cfg.x_point)?;
    build_grid_from_view(&view, cfg)
}

pub(crate) fn build_grid_from_view(view: &LocalView<'_>, cfg: &GridConfig) -> Result<OccupationProfile> {
    let mut points = Vec::new();
    for j in 0..=cfg.j_max {
        let h = cfg.bandwidth(j);
        let l = view.occupation(h);
        if l <= 0.0 {
            break;
        }
        points.push(GridPoint { index: j, h, l, psi: cfg.psi_at(j) });
    }
    OccupationProfile::from_points(points)
}
