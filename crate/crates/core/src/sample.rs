//! Observed sample paths `(X_{k-1}, Y_k, sigma_{k-1})`, `k = 1..N`.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Regression function `f: R^d -> R`, shared between threads.
pub type RegressionFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A realized sample up to the stopping time `N`.
///
/// Covariates are stored as flat rows of a fixed dimension `d`; row `k`
/// (0-based) is `X_k`, the covariate paired with the response `Y_{k+1}`.
#[derive(Clone)]
pub struct SamplePath {
    dim: usize,
    x_obs: Vec<f64>,
    y_obs: Vec<f64>,
    sigma: Vec<f64>,
    truth: Option<RegressionFn>,
}

impl fmt::Debug for SamplePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SamplePath")
            .field("dim", &self.dim)
            .field("n_stop", &self.n_stop())
            .field("has_truth", &self.truth.is_some())
            .finish()
    }
}

impl SamplePath {
    pub fn new(dim: usize, x_obs: Vec<f64>, y_obs: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSample("dimension must be at least 1".into()));
        }
        let n = y_obs.len();
        if n == 0 {
            return Err(Error::InvalidSample("stopping time must be at least 1".into()));
        }
        if x_obs.len() != n * dim || sigma.len() != n {
            return Err(Error::InvalidSample(format!(
                "length mismatch: {} covariate values for d = {dim}, {n} responses, {} scales",
                x_obs.len(),
                sigma.len()
            )));
        }
        if let Some(k) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidSample(format!("sigma[{k}] = {} is not positive and finite", sigma[k])));
        }
        if let Some(k) = y_obs.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidSample(format!("y[{k}] is not finite")));
        }
        if let Some(k) = x_obs.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSample(format!("covariate value {k} is not finite")));
        }
        Ok(Self { dim, x_obs, y_obs, sigma, truth: None })
    }

    pub fn with_truth(mut self, f: RegressionFn) -> Self {
        self.truth = Some(f);
        self
    }

    pub fn without_truth(mut self) -> Self {
        self.truth = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The realized stopping time `N`.
    pub fn n_stop(&self) -> usize {
        self.y_obs.len()
    }

    /// `X_k` for `k` in `0..N`.
    pub fn covariate(&self, k: usize) -> &[f64] {
        &self.x_obs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn covariates(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.x_obs.chunks_exact(self.dim)
    }

    pub fn x_flat(&self) -> &[f64] {
        &self.x_obs
    }

    pub fn y(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn truth(&self) -> Option<&RegressionFn> {
        self.truth.as_ref()
    }

    pub fn truth_at(&self, point: &[f64]) -> Result<f64> {
        self.truth.as_ref().map(|f| f(point)).ok_or(Error::NoTruth)
    }

    /// Reorders the index set jointly across covariates, responses and scales.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_stop();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidSample("not a permutation of the index set".into()));
            }
        }
        if perm.len() != n {
            return Err(Error::InvalidSample("not a permutation of the index set".into()));
        }
        let x = perm.iter().flat_map(|&p| self.covariate(p).iter().copied()).collect();
        let y = perm.iter().map(|&p| self.y_obs[p]).collect();
        let s = perm.iter().map(|&p| self.sigma[p]).collect();
        let mut out = Self::new(self.dim, x, y, s)?;
        out.truth = self.truth.clone();
        Ok(out)
    }

    /// Same sample with every scale multiplied by `c`.
    pub fn with_scaled_sigma(&self, c: f64) -> Result<Self> {
        let s = self.sigma.iter().map(|s| s * c).collect();
        let mut out = Self::new(self.dim, self.x_obs.clone(), self.y_obs.clone(), s)?;
        out.truth = self.truth.clone();
        Ok(out)
    }

    /// Same sample with every response shifted by `c`; the attached truth is
    /// shifted as well so residuals are unchanged.
    pub fn with_shifted_response(&self, c: f64) -> Result<Self> {
        let y = self.y_obs.iter().map(|y| y + c).collect();
        let mut out = Self::new(self.dim, self.x_obs.clone(), y, self.sigma.clone())?;
        out.truth = self.truth.clone().map(|f| -> RegressionFn { Arc::new(move |p: &[f64]| f(p) + c) });
        Ok(out)
    }

    /// Writes the sample as CSV with header `k,x_0..x_{d-1},y,sigma`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["k".to_string()];
        header.extend((0..self.dim).map(|j| format!("x_{j}")));
        header.push("y".into());
        header.push("sigma".into());
        w.write_record(&header)?;
        for k in 0..self.n_stop() {
            let mut row = Vec::with_capacity(self.dim + 3);
            row.push((k + 1).to_string());
            row.extend(self.covariate(k).iter().map(|v| v.to_string()));
            row.push(self.y_obs[k].to_string());
            row.push(self.sigma[k].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a sample written by [`SamplePath::write_csv`]; the dimension is
    /// inferred from the header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let dim = cols.len().saturating_sub(3);
        let expected: Vec<String> = std::iter::once("k".to_string())
            .chain((0..dim).map(|j| format!("x_{j}")))
            .chain(["y".to_string(), "sigma".to_string()])
            .collect();
        if dim == 0 || cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::InvalidSample(format!("unexpected header {cols:?}")));
        }
        let (mut x, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |j: usize| -> Result<f64> {
                rec[j]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidSample(format!("row {}, column {}: {e}", i + 1, cols[j])))
            };
            let k: usize = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::InvalidSample(format!("row {}: bad index: {e}", i + 1)))?;
            if k != i + 1 {
                return Err(Error::InvalidSample(format!("row {} has index {k}", i + 1)));
            }
            for j in 0..dim {
                x.push(parse(1 + j)?);
            }
            y.push(parse(1 + dim)?);
            s.push(parse(2 + dim)?);
        }
        Self::new(dim, x, y, s)
    }
}

/// Euclidean distance between a covariate row and the estimation point.
#[inline]
pub fn distance(row: &[f64], x: &[f64]) -> f64 {
    if row.len() == 1 {
        return (row[0] - x[0]).abs();
    }
    row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_samples() {
        assert!(SamplePath::new(1, vec![], vec![], vec![]).is_err());
        assert!(SamplePath::new(1, vec![0.0], vec![1.0], vec![0.0]).is_err());
        assert!(SamplePath::new(1, vec![0.0], vec![f64::NAN], vec![1.0]).is_err());
        assert!(SamplePath::new(2, vec![0.0], vec![1.0], vec![1.0]).is_err());
        assert!(SamplePath::new(1, vec![0.0, 1.0], vec![1.0, 2.0], vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = SamplePath::new(2, vec![0.1, -0.3, 1.0 / 3.0, 2.5e-17], vec![1.25, -7.0], vec![1.0, 0.3]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,x_0,x_1,y,sigma\n1,"));
        let back = SamplePath::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.x_flat(), s.x_flat());
        assert_eq!(back.y(), s.y());
        assert_eq!(back.sigma(), s.sigma());
    }

    #[test]
    fn csv_rejects_bad_header() {
        let text = "k,x,y,sigma\n1,0,0,1\n";
        assert!(SamplePath::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn permutation_must_be_bijective() {
        let s = SamplePath::new(1, vec![0.0, 1.0], vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(s.permuted(&[0, 0]).is_err());
        let p = s.permuted(&[1, 0]).unwrap();
        assert_eq!(p.y(), &[2.0, 1.0]);
    }
}
