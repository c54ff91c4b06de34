//! Lepski's bandwidth selection on the realized geometric grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{kernel_estimate, occupation_time, LocalView};
use crate::grid::{build_grid_from_view, GridConfig, GridPoint, OccupationProfile};
use crate::sample::SamplePath;

/// Outcome of the selection rule at one estimation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected bandwidth; `None` when the anchor does not exist.
    pub h_hat: Option<f64>,
    /// Grid index `j` of the selected bandwidth.
    pub j_hat: Option<usize>,
    pub f_hat: Option<f64>,
    /// Anchor bandwidth `H_{u0}`.
    pub h_u0: Option<f64>,
    /// Per grid element (descending), whether it passes all comparisons.
    pub admissible_flags: Vec<bool>,
    /// `false` when `L(h0)^{-1/2} > u0`.
    pub defined: bool,
}

impl SelectionResult {
    fn undefined(n: usize) -> Self {
        Self { h_hat: None, j_hat: None, f_hat: None, h_u0: None, admissible_flags: vec![false; n], defined: false }
    }
}

/// Position (in the descending profile) of `H_u`, the smallest grid bandwidth
/// with `(psi/L)^{1/2} <= u`.
///
/// `None` when the largest bandwidth already fails, which is exactly the
/// event `L(h0)^{-1/2} > u` because `psi(h0) = 1`.
pub fn level_position(profile: &OccupationProfile, u: f64) -> Option<usize> {
    let pts = profile.points();
    if pts[0].level() > u {
        return None;
    }
    pts.iter().rposition(|p| p.level() <= u)
}

/// `H_u = min { h in grid : (psi(h)/L(h))^{1/2} <= u }`.
pub fn bandwidth_at_level(profile: &OccupationProfile, u: f64) -> Option<f64> {
    level_position(profile, u).map(|i| profile.points()[i].h)
}

/// Applies the rule to a profile with precomputed estimates `f_hat(h)` (one per
/// grid point, same order).
pub fn select_with_estimates(profile: &OccupationProfile, estimates: &[f64], cfg: &GridConfig) -> SelectionResult {
    let pts = profile.points();
    debug_assert_eq!(pts.len(), estimates.len());
    let Some(anchor) = level_position(profile, cfg.u0) else {
        return SelectionResult::undefined(pts.len());
    };
    let thresholds: Vec<f64> = pts.iter().map(|p| cfg.nu * p.level()).collect();
    let mut flags = vec![false; pts.len()];
    for c in 0..=anchor {
        let fc = estimates[c];
        flags[c] = (c..=anchor).all(|j| (fc - estimates[j]).abs() <= thresholds[j]);
    }
    // The anchor only compares against itself, so it always passes.
    let best = flags.iter().position(|&ok| ok).unwrap_or(anchor);
    SelectionResult {
        h_hat: Some(pts[best].h),
        j_hat: Some(pts[best].index),
        f_hat: Some(estimates[best]),
        h_u0: Some(pts[anchor].h),
        admissible_flags: flags,
        defined: true,
    }
}

/// Realized grid together with the kernel estimates on it.
pub struct GridEstimates {
    pub profile: OccupationProfile,
    pub estimates: Vec<f64>,
}

pub fn grid_estimates(sample: &SamplePath, cfg: &GridConfig) -> Result<GridEstimates> {
    cfg.validate()?;
    let view = LocalView::new(sample, &cfg.x_point)?;
    let profile = build_grid_from_view(&view, cfg)?;
    let estimates = profile.points().iter().map(|p| view.estimate(p.h)).collect::<Result<Vec<_>>>()?;
    Ok(GridEstimates { profile, estimates })
}

/// Lepski's rule: the largest grid bandwidth `h >= H_{u0}` whose estimate stays
/// within `nu (psi(h')/L(h'))^{1/2}` of every `f_hat(h')`, `h'` in
/// `[H_{u0}, h]`.
pub fn select_bandwidth(sample: &SamplePath, cfg: &GridConfig) -> Result<SelectionResult> {
    let g = grid_estimates(sample, cfg)?;
    Ok(select_with_estimates(&g.profile, &g.estimates, cfg))
}

/// Literal evaluation of the defining set, with fresh kernel estimates for
/// every comparison. Quadratic in the grid size; used as a test oracle.
pub fn brute_force_select(sample: &SamplePath, cfg: &GridConfig) -> Result<SelectionResult> {
    cfg.validate()?;
    let x = &cfg.x_point;
    let mut grid: Vec<GridPoint> = Vec::new();
    for j in 0..=cfg.j_max {
        let h = cfg.bandwidth(j);
        let l = occupation_time(sample, x, h);
        if l <= 0.0 {
            break;
        }
        grid.push(GridPoint { index: j, h, l, psi: cfg.psi_at(j) });
    }
    if grid.is_empty() {
        return Err(Error::GridEmpty);
    }
    if grid[0].level() > cfg.u0 {
        return Ok(SelectionResult::undefined(grid.len()));
    }
    let h_u0 = grid
        .iter()
        .filter(|p| p.level() <= cfg.u0)
        .map(|p| p.h)
        .fold(f64::INFINITY, f64::min);

    let mut flags = vec![false; grid.len()];
    let mut best: Option<usize> = None;
    for (c, cand) in grid.iter().enumerate() {
        if cand.h < h_u0 {
            continue;
        }
        let mut ok = true;
        for other in grid.iter().filter(|p| p.h >= h_u0 && p.h <= cand.h) {
            let fc = kernel_estimate(sample, x, cand.h)?;
            let fo = kernel_estimate(sample, x, other.h)?;
            if (fc - fo).abs() > cfg.nu * other.level() {
                ok = false;
            }
        }
        flags[c] = ok;
        if ok && best.is_none_or(|b| cand.h > grid[b].h) {
            best = Some(c);
        }
    }
    let best = best.expect("the anchor bandwidth is always admissible");
    Ok(SelectionResult {
        h_hat: Some(grid[best].h),
        j_hat: Some(grid[best].index),
        f_hat: Some(kernel_estimate(sample, x, grid[best].h)?),
        h_u0: Some(h_u0),
        admissible_flags: flags,
        defined: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile_constant(n: f64, j_max: usize, cfg: &GridConfig) -> OccupationProfile {
        OccupationProfile::from_points(
            (0..=j_max).map(|j| GridPoint { index: j, h: cfg.bandwidth(j), l: n, psi: cfg.psi_at(j) }).collect(),
        )
        .unwrap()
    }

    #[test]
    fn level_closed_form_when_all_data_at_x() {
        let cfg = GridConfig { q: 0.5, b: 1.0, ..GridConfig::new(vec![0.0], 1.0) };
        let n = 20.0;
        let j_max = 40;
        let p = profile_constant(n, j_max, &cfg);
        for u in [0.3, 0.5, 0.77, 1.1, 1.6] {
            // psi(h_j) = 1 + j ln 2 <= u^2 n  <=>  j <= (u^2 n - 1) / ln 2
            let j_star = (((u * u * n - 1.0) / 2f64.ln()).floor() as usize).min(j_max);
            assert_eq!(bandwidth_at_level(&p, u), Some(cfg.bandwidth(j_star)), "u = {u}");
        }
        let huge = 1e3;
        assert_eq!(bandwidth_at_level(&p, huge), Some(cfg.bandwidth(j_max)));
        assert_eq!(bandwidth_at_level(&p, 0.9 / n.sqrt()), None);
    }

    fn sample(x: Vec<f64>, y: Vec<f64>) -> SamplePath {
        let n = y.len();
        SamplePath::new(1, x, y, vec![1.0; n]).unwrap()
    }

    #[test]
    fn infinite_threshold_selects_h0() {
        let x: Vec<f64> = (0..200).map(|k| (k as f64 / 199.0) * 2.0 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 10.0 * v * v + (v * 31.0).sin()).collect();
        let cfg = GridConfig { nu: 1e12, q: 0.7, ..GridConfig::new(vec![0.0], 1.0) };
        let r = select_bandwidth(&sample(x, y), &cfg).unwrap();
        assert!(r.defined);
        assert_eq!(r.h_hat, Some(1.0));
    }

    #[test]
    fn zero_threshold_selects_anchor() {
        let x: Vec<f64> = (0..200).map(|k| (k as f64 / 199.0) * 2.0 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.abs() + 0.01 * v).collect();
        // nu must be positive; a vanishing value leaves only the degenerate comparison.
        let cfg = GridConfig { nu: 1e-300, q: 0.7, ..GridConfig::new(vec![0.0], 1.0) };
        let r = select_bandwidth(&sample(x.clone(), y.clone()), &cfg).unwrap();
        assert_eq!(r.h_hat, r.h_u0);
        assert_eq!(r, brute_force_select(&sample(x, y), &cfg).unwrap());
    }

    #[test]
    fn single_element_grid() {
        let s = sample(vec![0.9], vec![2.0]);
        let cfg = GridConfig { q: 0.5, ..GridConfig::new(vec![0.0], 1.0) };
        let r = brute_force_select(&s, &cfg).unwrap();
        assert_eq!(r.h_hat, Some(1.0));
        assert_eq!(r.f_hat, Some(2.0));
        assert_eq!(r, select_bandwidth(&s, &cfg).unwrap());
    }

    #[test]
    fn two_element_grid_rejects_large_deviation() {
        // h0 = 1 holds both points, h1 = 0.5 only the first; f_hat(h0) = 50.5,
        // f_hat(h1) = 1, threshold at h1 is nu (psi(h1)/1)^{1/2} ~ 2.6.
        let s = sample(vec![0.1, 0.9], vec![1.0, 100.0]);
        let cfg = GridConfig { q: 0.5, u0: 2.0, nu: 2.0, j_max: 1, ..GridConfig::new(vec![0.0], 1.0) };
        let r = brute_force_select(&s, &cfg).unwrap();
        assert_eq!(r.h_u0, Some(0.5));
        assert_eq!(r.h_hat, Some(0.5));
        assert_eq!(r.admissible_flags, vec![false, true]);
        assert_eq!(r, select_bandwidth(&s, &cfg).unwrap());
    }

    #[test]
    fn undefined_when_too_little_data() {
        let s = sample(vec![0.1, 0.2], vec![1.0, 1.0]);
        let cfg = GridConfig { u0: 0.5, ..GridConfig::new(vec![0.0], 1.0) };
        let r = select_bandwidth(&s, &cfg).unwrap();
        assert!(!r.defined);
        assert_eq!(r.h_hat, None);
        assert_eq!(r, brute_force_select(&s, &cfg).unwrap());
    }

    #[test]
    fn threshold_ties_are_admissible() {
        // f_hat(h0) - f_hat(h1) = 1 = nu * level(h1) exactly.
        let s = sample(vec![0.0, 0.0, 0.9, 0.9], vec![0.0, 0.0, 2.0, 2.0]);
        let cfg = GridConfig { q: 0.5, j_max: 1, u0: 10.0, ..GridConfig::new(vec![0.0], 1.0) };
        let g = grid_estimates(&s, &cfg).unwrap();
        let level1 = g.profile.points()[1].level();
        let mut nu = 1.0 / level1;
        while nu * level1 < 1.0 {
            nu = f64::from_bits(nu.to_bits() + 1);
        }
        while nu * level1 > 1.0 {
            nu = f64::from_bits(nu.to_bits() - 1);
        }
        let cfg = GridConfig { nu, ..cfg };
        assert_eq!((g.estimates[0] - g.estimates[1]).abs(), cfg.nu * level1);
        let r = select_bandwidth(&s, &cfg).unwrap();
        assert_eq!(r.h_hat, Some(1.0));
    }

    fn arb_instance() -> impl Strategy<Value = (SamplePath, GridConfig)> {
        (1usize..=2, 1usize..60, any::<u64>(), 0.3f64..0.95, 0.1f64..4.0, 0.05f64..3.0, 0.2f64..3.0, 1usize..25)
            .prop_map(|(d, n, seed, q, nu, b, u0, j_max)| {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..2.0)).collect();
                let cfg = GridConfig { q, nu, b, u0, j_max, ..GridConfig::new(vec![0.0; d], 1.5) };
                (SamplePath::new(d, x, y, s).unwrap(), cfg)
            })
    }

    proptest! {
        #[test]
        fn fast_rule_equals_brute_force((s, cfg) in arb_instance()) {
            match (select_bandwidth(&s, &cfg), brute_force_select(&s, &cfg)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "disagreement {:?} vs {:?}", a, b),
            }
        }

        #[test]
        fn selection_respects_anchor((s, cfg) in arb_instance()) {
            if let Ok(r) = select_bandwidth(&s, &cfg) {
                if r.defined {
                    let g = grid_estimates(&s, &cfg).unwrap();
                    let h = r.h_hat.unwrap();
                    prop_assert!(h >= r.h_u0.unwrap());
                    prop_assert!(g.profile.bandwidths().contains(&h));
                    let anchor = g.profile.points().iter().find(|p| p.h == r.h_u0.unwrap()).unwrap();
                    prop_assert!(anchor.level() <= cfg.u0);
                }
            }
        }

        #[test]
        fn selection_monotone_in_nu((s, cfg) in arb_instance(), factor in 1.0f64..10.0) {
            let wide = GridConfig { nu: cfg.nu * factor, ..cfg.clone() };
            if let (Ok(a), Ok(b)) = (select_bandwidth(&s, &cfg), select_bandwidth(&s, &wide)) {
                if a.defined {
                    prop_assert!(a.h_hat.unwrap() <= b.h_hat.unwrap());
                }
            }
        }

        #[test]
        fn level_bandwidth_monotone_in_u((s, cfg) in arb_instance(), u1 in 0.05f64..3.0, du in 0.0f64..3.0) {
            if let Ok(g) = grid_estimates(&s, &cfg) {
                let u2 = u1 + du;
                if let Some(h1) = bandwidth_at_level(&g.profile, u1) {
                    let h2 = bandwidth_at_level(&g.profile, u2).unwrap();
                    prop_assert!(h2 <= h1);
                }
            }
        }

        #[test]
        fn response_shift_leaves_selection((s, cfg) in arb_instance(), c in -5i32..5) {
            let shifted = s.with_shifted_response(c as f64).unwrap();
            if let (Ok(a), Ok(b)) = (select_bandwidth(&s, &cfg), select_bandwidth(&shifted, &cfg)) {
                prop_assert_eq!(a.h_hat, b.h_hat);
                if let (Some(fa), Some(fb)) = (a.f_hat, b.f_hat) {
                    prop_assert!((fb - fa - c as f64).abs() <= 1e-12 * (1.0 + fa.abs()));
                }
            }
        }
    }
}
