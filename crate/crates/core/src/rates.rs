//! Smoothness envelopes, the oracle bandwidth and the random and
//! deterministic convergence rates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::design::IntervalProbability;
use crate::error::{Error, Result};
use crate::estimator::{tilde_estimate, LocalView};
use crate::grid::{build_grid_from_view, GridConfig, OccupationProfile};
use crate::lepski::bandwidth_at_level;
use crate::sample::SamplePath;

/// Bandwidth-indexed function (a modulus or a slowly varying factor).
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative tolerance of every bandwidth root.
pub const ROOT_REL_TOL: f64 = 1e-10;

#[derive(Clone)]
pub enum ModulusKind {
    /// `h -> W(h)` supplied directly, e.g. the realized bias sup.
    Explicit(ScalarFn),
    /// `w(h) = scale * h^s * ell(h)`.
    Holder { s: f64, scale: f64, slowly: Option<ScalarFn> },
}

impl fmt::Debug for ModulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulusKind::Explicit(_) => f.write_str("Explicit(..)"),
            ModulusKind::Holder { s, scale, slowly } => f
                .debug_struct("Holder")
                .field("s", s)
                .field("scale", scale)
                .field("slowly", &slowly.as_ref().map(|_| ".."))
                .finish(),
        }
    }
}

/// Smoothness envelope with the floor/cap parameters of the modulus.
#[derive(Debug, Clone)]
pub struct ModulusSpec {
    pub kind: ModulusKind,
    pub delta0: f64,
    pub alpha0: f64,
    pub u0: f64,
}

impl ModulusSpec {
    pub fn explicit(w: ScalarFn, cfg: &GridConfig) -> Self {
        Self { kind: ModulusKind::Explicit(w), delta0: cfg.delta0, alpha0: cfg.alpha0, u0: cfg.u0 }
    }

    /// Hölder-type modulus, checked on 10^3 log-spaced bandwidths in
    /// `[1e-8 h0, h0]` for monotonicity, the quadratic floor `delta0 (h/h0)^2`
    /// and the cap `u0`.
    pub fn holder(s: f64, scale: f64, slowly: Option<ScalarFn>, cfg: &GridConfig) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidConfig(format!("Hölder exponent must lie in (0, 1], got {s}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("Hölder scale must be positive, got {scale}")));
        }
        let spec = Self {
            kind: ModulusKind::Holder { s, scale, slowly },
            delta0: cfg.delta0,
            alpha0: cfg.alpha0,
            u0: cfg.u0,
        };
        let n = 1000;
        let mut prev = 0.0;
        for i in 0..n {
            let h = cfg.h0 * 10f64.powf(-8.0 + 8.0 * i as f64 / (n - 1) as f64);
            let w = spec.w(h);
            if !(w.is_finite() && w > prev) {
                return Err(Error::InvalidConfig(format!("modulus is not increasing near h = {h:e}")));
            }
            if w < cfg.delta0 * (h / cfg.h0).powi(2) {
                return Err(Error::InvalidConfig(format!("modulus falls below delta0 (h/h0)^2 at h = {h:e}")));
            }
            if w > cfg.u0 {
                return Err(Error::InvalidConfig(format!("modulus exceeds u0 at h = {h:e}")));
            }
            prev = w;
        }
        Ok(spec)
    }

    /// The raw envelope `W(h)` (or `w(h)`).
    pub fn w(&self, h: f64) -> f64 {
        match &self.kind {
            ModulusKind::Explicit(f) => f(h),
            ModulusKind::Holder { s, scale, slowly } => {
                let ell = slowly.as_ref().map_or(1.0, |l| l(h));
                scale * h.powf(*s) * ell
            }
        }
    }
}

/// `W̄(h) = [W(h) ∨ delta0 (h/h0)^alpha0] ∧ u0`.
pub fn modulus_bar(spec: &ModulusSpec, h: f64, h0: f64) -> f64 {
    spec.w(h).max(spec.delta0 * (h / h0).powf(spec.alpha0)).min(spec.u0)
}

/// Position of the oracle bandwidth `H* = min { h : (psi/L)^{1/2} <= W̄(h) }`.
pub fn oracle_position(profile: &OccupationProfile, spec: &ModulusSpec, cfg: &GridConfig) -> Option<usize> {
    let pts = profile.points();
    if pts[0].level() > modulus_bar(spec, pts[0].h, cfg.h0) {
        return None;
    }
    pts.iter().rposition(|p| p.level() <= modulus_bar(spec, p.h, cfg.h0))
}

pub fn oracle_bandwidth(profile: &OccupationProfile, spec: &ModulusSpec, cfg: &GridConfig) -> Option<f64> {
    oracle_position(profile, spec, cfg).map(|i| profile.points()[i].h)
}

/// `Ω' = {L(h0)^{-1/2} <= W̄(h0)} ∩ {W(H*) <= u0}`.
pub fn omega_prime_event(profile: &OccupationProfile, spec: &ModulusSpec, cfg: &GridConfig) -> bool {
    match oracle_bandwidth(profile, spec, cfg) {
        Some(h_star) => spec.w(h_star) <= spec.u0,
        None => false,
    }
}

/// `Ω0 = {L(h0)^{-1/2} <= w(h0)}`.
pub fn omega_zero_event(l_h0: f64, spec: &ModulusSpec, h0: f64) -> bool {
    l_h0 > 0.0 && l_h0.powf(-0.5) <= spec.w(h0)
}

/// The realized bias envelope `W(h) = sup_{h' in [H_{u0}, h] ∩ grid} |f̃(h') - f(x)|`,
/// as a step function of `h`.
pub fn empirical_bias_modulus(sample: &SamplePath, cfg: &GridConfig) -> Result<ScalarFn> {
    let view = LocalView::new(sample, &cfg.x_point)?;
    let profile = build_grid_from_view(&view, cfg)?;
    let fx = sample.truth_at(&cfg.x_point)?;
    let h_u0 = bandwidth_at_level(&profile, cfg.u0).unwrap_or(cfg.h0);
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for p in profile.points().iter().rev().filter(|p| p.h >= h_u0) {
        let bias = (tilde_estimate(sample, &cfg.x_point, p.h)? - fx).abs();
        let running = steps.last().map_or(bias, |&(_, b)| b.max(bias));
        steps.push((p.h, running));
    }
    Ok(Arc::new(move |h: f64| {
        let idx = steps.partition_point(|&(hh, _)| hh <= h);
        if idx == 0 {
            0.0
        } else {
            steps[idx - 1].1
        }
    }))
}

/// Smallest `h` in `[lo, hi]` with `g(h) >= 0` for nondecreasing `g`, assuming
/// `g(lo) < 0 <= g(hi)`; returns the feasible end of the final bracket.
pub fn bisect_first_feasible<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn ln_psi(h: f64, cfg: &GridConfig) -> f64 {
    1.0 + cfg.b * (cfg.h0 / h).ln()
}

/// Walks down from `hi` by halving until `g` becomes negative.
fn lower_bracket<G: Fn(f64) -> f64>(g: &G, hi: f64) -> Option<f64> {
    let mut lo = hi;
    for _ in 0..2000 {
        lo *= 0.5;
        if lo <= f64::MIN_POSITIVE {
            return None;
        }
        if g(lo) < 0.0 {
            return Some(lo);
        }
    }
    None
}

/// `H_w = min { h in (0, h0] : (psi(h)/L(h))^{1/2} <= w(h) }` over the
/// continuum, defined on `Ω0`.
///
/// `L` is a right-continuous step function with jumps at the observed
/// distances, so the first feasible bandwidth is either a jump point or the
/// root of `L w(h)^2 = psi(h)` on the flat piece where feasibility starts.
pub fn empirical_hw(sample: &SamplePath, spec: &ModulusSpec, cfg: &GridConfig) -> Result<Option<f64>> {
    cfg.validate()?;
    let view = LocalView::new(sample, &cfg.x_point)?;
    let mut near: Vec<(f64, f64)> = view
        .distances()
        .iter()
        .zip(view.weights())
        .filter(|(d, _)| **d <= cfg.h0)
        .map(|(&d, &w)| (d, w))
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Merge ties into (jump point, cumulative occupation).
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut cum = 0.0;
    for (d, w) in near {
        cum += w;
        match pieces.last_mut() {
            Some(last) if last.0 == d => last.1 = cum,
            _ => pieces.push((d, cum)),
        }
    }
    let Some(&(_, l_h0)) = pieces.last() else {
        return Ok(None);
    };
    if !omega_zero_event(l_h0, spec, cfg.h0) {
        return Ok(None);
    }
    let feasible = |l: f64, h: f64| l * spec.w(h).powi(2) - ln_psi(h, cfg);
    for (i, &(start, l)) in pieces.iter().enumerate() {
        let end = pieces.get(i + 1).map_or(cfg.h0, |p| p.0);
        if feasible(l, end) < 0.0 {
            continue;
        }
        if start > 0.0 && feasible(l, start) >= 0.0 {
            return Ok(Some(start));
        }
        let g = |h: f64| feasible(l, h);
        let lo = if start > 0.0 {
            start
        } else {
            match lower_bracket(&g, end) {
                Some(lo) => lo,
                None => return Ok(Some(f64::MIN_POSITIVE)),
            }
        };
        return Ok(Some(bisect_first_feasible(g, lo, end, ROOT_REL_TOL)));
    }
    // The last piece ends at h0 with the full occupation, which is feasible on Ω0.
    Ok(Some(cfg.h0))
}

/// `h_w = min { h in (0, h0] : (psi(h) / E L(h))^{1/2} <= w(h) }` with
/// `E L(h) = n P_X[I_h] / sigma^2`.
pub fn deterministic_hw(
    px: &dyn IntervalProbability,
    spec: &ModulusSpec,
    n: f64,
    sigma: f64,
    cfg: &GridConfig,
) -> Result<f64> {
    cfg.validate()?;
    let p_h0 = px.prob(cfg.h0);
    let threshold = sigma * sigma / (p_h0 * spec.w(cfg.h0).powi(2));
    if !(n >= threshold) {
        return Err(Error::TooFewSamples { n, threshold });
    }
    let g = |h: f64| n * px.prob(h) * spec.w(h).powi(2) / (sigma * sigma) - ln_psi(h, cfg);
    if g(cfg.h0) < 0.0 {
        // Rounding at the boundary n = threshold.
        return Ok(cfg.h0);
    }
    let lo = lower_bracket(&g, cfg.h0)
        .ok_or_else(|| Error::InvalidConfig("feasibility never fails as h -> 0; check the modulus".into()))?;
    Ok(bisect_first_feasible(g, lo, cfg.h0, ROOT_REL_TOL))
}

/// Random and deterministic rates at one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n: usize,
    pub seed: Option<u64>,
    /// Oracle bandwidth `H*` on the grid.
    pub h_star: Option<f64>,
    /// `W̄(H*)`.
    pub wbar_h_star: Option<f64>,
    /// Continuum bandwidth `H_w`.
    pub h_w_empirical: Option<f64>,
    /// `w(H_w)`.
    pub rate_random: Option<f64>,
    pub h_w: Option<f64>,
    /// `w(h_w)`.
    pub rate_det: Option<f64>,
    pub ratio: Option<f64>,
    pub omega0: bool,
    pub omega_prime: bool,
}

impl RateReport {
    pub const CSV_HEADER: [&'static str; 12] = [
        "n",
        "seed",
        "h_star",
        "wbar_h_star",
        "h_w_empirical",
        "rate_random",
        "h_w",
        "rate_det",
        "ratio",
        "omega0",
        "omega_prime",
        "contained",
    ];

    /// Whether `w(h_w)/4 <= w(H_w) <= 4 w(h_w)` on `Ω0`.
    pub fn contained(&self) -> bool {
        self.omega0 && self.ratio.is_some_and(|r| (0.25..=4.0).contains(&r))
    }

    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        vec![
            self.n.to_string(),
            self.seed.map_or_else(String::new, |s| s.to_string()),
            opt(self.h_star),
            opt(self.wbar_h_star),
            opt(self.h_w_empirical),
            opt(self.rate_random),
            opt(self.h_w),
            opt(self.rate_det),
            opt(self.ratio),
            self.omega0.to_string(),
            self.omega_prime.to_string(),
            self.contained().to_string(),
        ]
    }
}

/// Assembles the oracle bandwidth, both rates and the event flags.
///
/// The deterministic rate needs a constant noise scale and a closed-form or
/// estimated `P_X`; otherwise those fields stay undefined.
pub fn rate_report(
    sample: &SamplePath,
    cfg: &GridConfig,
    spec: &ModulusSpec,
    px: Option<&dyn IntervalProbability>,
) -> Result<RateReport> {
    cfg.validate()?;
    let n = sample.n_stop();
    let mut report = RateReport {
        n,
        seed: None,
        h_star: None,
        wbar_h_star: None,
        h_w_empirical: None,
        rate_random: None,
        h_w: None,
        rate_det: None,
        ratio: None,
        omega0: false,
        omega_prime: false,
    };

    let sigma0 = sample.sigma()[0];
    if let Some(px) = px {
        if sample.sigma().iter().all(|&s| s == sigma0) {
            if let Ok(h) = deterministic_hw(px, spec, n as f64, sigma0, cfg) {
                report.h_w = Some(h);
                report.rate_det = Some(spec.w(h));
            }
        }
    }

    let view = LocalView::new(sample, &cfg.x_point)?;
    let profile = match build_grid_from_view(&view, cfg) {
        Ok(p) => p,
        Err(Error::GridEmpty) => return Ok(report),
        Err(e) => return Err(e),
    };
    report.h_star = oracle_bandwidth(&profile, spec, cfg);
    report.wbar_h_star = report.h_star.map(|h| modulus_bar(spec, h, cfg.h0));
    report.omega_prime = omega_prime_event(&profile, spec, cfg);
    report.omega0 = omega_zero_event(profile.l_h0(), spec, cfg.h0);
    if report.omega0 {
        report.h_w_empirical = empirical_hw(sample, spec, cfg)?;
        report.rate_random = report.h_w_empirical.map(|h| spec.w(h));
        if let (Some(r), Some(d)) = (report.rate_random, report.rate_det) {
            report.ratio = Some(r / d);
        }
    }
    Ok(report)
}
