//! Rectangular-kernel statistics at a fixed estimation point: occupation
//! time, kernel estimate, bias proxy and martingale part.
//!
//! All sums run over the index set in its natural order so that the cached
//! [`LocalView`] reproduces the free functions bit for bit.

use crate::error::{Error, Result};
use crate::sample::{distance, SamplePath};

#[inline]
fn weight(sigma: f64) -> f64 {
    1.0 / (sigma * sigma)
}

fn check_point(sample: &SamplePath, x: &[f64]) -> Result<()> {
    if sample.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: sample.dim(), got: x.len() });
    }
    Ok(())
}

/// `L(h) = sum_k sigma_{k-1}^{-2} 1{|X_{k-1} - x| <= h}` over the closed ball.
///
/// # Panics
/// If `x` does not match the sample dimension.
pub fn occupation_time(sample: &SamplePath, x: &[f64], h: f64) -> f64 {
    assert_eq!(sample.dim(), x.len(), "estimation point dimension");
    let mut l = 0.0;
    for (row, &s) in sample.covariates().zip(sample.sigma()) {
        if distance(row, x) <= h {
            l += weight(s);
        }
    }
    l
}

/// Weighted mean of the responses inside the window of radius `h`.
pub fn kernel_estimate(sample: &SamplePath, x: &[f64], h: f64) -> Result<f64> {
    check_point(sample, x)?;
    let (mut num, mut den) = (0.0, 0.0);
    for ((row, &s), &y) in sample.covariates().zip(sample.sigma()).zip(sample.y()) {
        if distance(row, x) <= h {
            let w = weight(s);
            num += w * y;
            den += w;
        }
    }
    if den <= 0.0 {
        return Err(Error::EmptyWindow(h));
    }
    Ok(num / den)
}

/// Same weights as [`kernel_estimate`] applied to `f(X_{k-1})`.
pub fn tilde_estimate(sample: &SamplePath, x: &[f64], h: f64) -> Result<f64> {
    check_point(sample, x)?;
    let f = sample.truth().ok_or(Error::NoTruth)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (row, &s) in sample.covariates().zip(sample.sigma()) {
        if distance(row, x) <= h {
            let w = weight(s);
            num += w * f(row);
            den += w;
        }
    }
    if den <= 0.0 {
        return Err(Error::EmptyWindow(h));
    }
    Ok(num / den)
}

/// `M(h) = sum_k sigma_{k-1}^{-2} 1{|X_{k-1} - x| <= h} eps_k`, with
/// `eps_k = Y_k - f(X_{k-1})`.
pub fn martingale_part(sample: &SamplePath, x: &[f64], h: f64) -> Result<f64> {
    check_point(sample, x)?;
    let f = sample.truth().ok_or(Error::NoTruth)?;
    let mut m = 0.0;
    for ((row, &s), &y) in sample.covariates().zip(sample.sigma()).zip(sample.y()) {
        if distance(row, x) <= h {
            m += weight(s) * (y - f(row));
        }
    }
    Ok(m)
}

/// `Z = sqrt(a) |m| / (a + l)`.
pub fn z_statistic(m: f64, l: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidConfig(format!("a must be positive, got {a}")));
    }
    if !(l >= 0.0) {
        return Err(Error::InvalidConfig(format!("occupation time must be nonnegative, got {l}")));
    }
    Ok(a.sqrt() * m.abs() / (a + l))
}

/// Distances, weights and responses around one estimation point, computed once.
pub struct LocalView<'a> {
    dist: Vec<f64>,
    weights: Vec<f64>,
    y: &'a [f64],
}

impl<'a> LocalView<'a> {
    pub fn new(sample: &'a SamplePath, x: &[f64]) -> Result<Self> {
        check_point(sample, x)?;
        Ok(Self {
            dist: sample.covariates().map(|row| distance(row, x)).collect(),
            weights: sample.sigma().iter().map(|&s| weight(s)).collect(),
            y: sample.y(),
        })
    }

    pub fn distances(&self) -> &[f64] {
        &self.dist
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn occupation(&self, h: f64) -> f64 {
        let mut l = 0.0;
        for (&d, &w) in self.dist.iter().zip(&self.weights) {
            if d <= h {
                l += w;
            }
        }
        l
    }

    pub fn estimate(&self, h: f64) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&d, &w), &y) in self.dist.iter().zip(&self.weights).zip(self.y) {
            if d <= h {
                num += w * y;
                den += w;
            }
        }
        if den <= 0.0 {
            return Err(Error::EmptyWindow(h));
        }
        Ok(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn path_1d(x: &[f64], y: &[f64], s: &[f64]) -> SamplePath {
        SamplePath::new(1, x.to_vec(), y.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn occupation_examples() {
        let s = path_1d(&[0.0, 0.1, -0.2, 0.3, 0.05, -0.5, 0.5], &[0.0; 7], &[1.0; 7]);
        assert_eq!(occupation_time(&s, &[0.0], 0.5), 7.0);
        assert_eq!(occupation_time(&s, &[10.0], 0.5), 0.0);
        let s = path_1d(&[0.5, 3.0], &[0.0; 2], &[2.0, 1.0]);
        assert_eq!(occupation_time(&s, &[0.0], 1.0), 0.25);
    }

    #[test]
    fn boundary_is_included() {
        let s = path_1d(&[1.0], &[2.0], &[1.0]);
        assert_eq!(occupation_time(&s, &[0.0], 1.0), 1.0);
        let s2 = SamplePath::new(2, vec![3.0, 4.0], vec![1.0], vec![1.0]).unwrap();
        assert_eq!(occupation_time(&s2, &[0.0, 0.0], 5.0), 1.0);
        assert_eq!(occupation_time(&s2, &[0.0, 0.0], 4.999), 0.0);
    }

    #[test]
    fn kernel_estimate_examples() {
        let s = path_1d(&[0.1, -0.3, 0.7], &[2.5; 3], &[1.0, 3.0, 0.5]);
        assert_relative_eq!(kernel_estimate(&s, &[0.0], 1.0).unwrap(), 2.5, max_relative = 1e-15);
        let s = path_1d(&[0.1, 5.0], &[3.7, -1.0], &[1.0, 1.0]);
        assert_eq!(kernel_estimate(&s, &[0.0], 1.0).unwrap(), 3.7);
        let s = path_1d(&[0.1, 0.2], &[1.0, 5.0], &[1.0, 2.0]);
        assert_relative_eq!(kernel_estimate(&s, &[0.0], 0.5).unwrap(), 1.8, epsilon = 1e-15);
        assert!(matches!(kernel_estimate(&s, &[0.0], 0.01), Err(Error::EmptyWindow(_))));
    }

    #[test]
    fn tilde_and_martingale_examples() {
        let s = path_1d(&[0.3, 4.0], &[1.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(tilde_estimate(&s, &[0.0], 1.0), Err(Error::NoTruth)));
        assert!(matches!(martingale_part(&s, &[0.0], 1.0), Err(Error::NoTruth)));

        let s = s.with_truth(Arc::new(|p: &[f64]| p[0]));
        assert_eq!(tilde_estimate(&s, &[0.0], 1.0).unwrap(), 0.3);

        let c = path_1d(&[0.1, 0.2], &[4.0, 4.0], &[1.0, 2.0]).with_truth(Arc::new(|_: &[f64]| 4.0));
        assert_eq!(tilde_estimate(&c, &[0.0], 1.0).unwrap(), 4.0);
        assert_eq!(martingale_part(&c, &[0.0], 1.0).unwrap(), 0.0);
        assert_eq!(tilde_estimate(&c, &[0.0], 1.0).unwrap(), kernel_estimate(&c, &[0.0], 1.0).unwrap());

        let one = path_1d(&[0.0], &[0.6], &[1.0]).with_truth(Arc::new(|_: &[f64]| 1.0));
        assert_relative_eq!(martingale_part(&one, &[0.0], 1.0).unwrap(), -0.4, epsilon = 1e-15);

        let two = path_1d(&[0.0, 0.1], &[1.3, 0.9], &[1.0, 1.0]).with_truth(Arc::new(|_: &[f64]| 1.0));
        assert_relative_eq!(martingale_part(&two, &[0.0], 1.0).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn z_statistic_examples() {
        assert_eq!(z_statistic(0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_eq!(z_statistic(2.0, 0.0, 4.0).unwrap(), 1.0);
        assert_eq!(z_statistic(-3.0, 1.0, 1.0).unwrap(), 1.5);
        assert!(z_statistic(1.0, 1.0, 0.0).is_err());
        assert!(z_statistic(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn local_view_matches_free_functions_bitwise() {
        let x: Vec<f64> = (0..50).map(|k| ((k * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let y: Vec<f64> = (0..50).map(|k| (k as f64 * 0.7).sin()).collect();
        let s: Vec<f64> = (0..50).map(|k| 0.5 + (k % 7) as f64 * 0.3).collect();
        let p = path_1d(&x, &y, &s);
        let v = LocalView::new(&p, &[0.1]).unwrap();
        for h in [0.01, 0.05, 0.2, 0.5, 1.3] {
            assert_eq!(v.occupation(h).to_bits(), occupation_time(&p, &[0.1], h).to_bits());
            match kernel_estimate(&p, &[0.1], h) {
                Ok(f) => assert_eq!(v.estimate(h).unwrap().to_bits(), f.to_bits()),
                Err(_) => assert!(v.estimate(h).is_err()),
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = path_1d(&[0.0], &[1.0], &[1.0]);
        assert!(matches!(kernel_estimate(&p, &[0.0, 0.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }
}
