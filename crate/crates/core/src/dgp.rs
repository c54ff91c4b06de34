//! Data-generating processes: i.i.d. regression, linear vector
//! autoregression, a stationary Gaussian AR(1) design and a transient random
//! walk, each observed up to a fixed size or a budget-driven stopping time.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::{DesignAt, DesignLaw, IntervalProbability};
use crate::error::{Error, Result};
use crate::sample::{RegressionFn, SamplePath};
use crate::seed::rng_for;
use crate::stability::NoiseLaw;

/// Regression functions with a closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant { value: f64 },
    Linear { coef: Vec<f64>, intercept: f64 },
    /// `scale * |y - center|^s`, Hölder of order `s` with constant `scale`.
    Holder { scale: f64, s: f64, center: Vec<f64> },
    /// `amplitude * sin(frequency * y_0)`.
    Sine { amplitude: f64, frequency: f64 },
}

impl FunctionSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self {
            FunctionSpec::Linear { coef, .. } if coef.len() != dim => {
                bad(format!("linear coefficients have length {}, expected {dim}", coef.len()))
            }
            FunctionSpec::Holder { center, .. } if center.len() != dim => {
                bad(format!("Hölder center has length {}, expected {dim}", center.len()))
            }
            FunctionSpec::Holder { s, .. } if !(*s > 0.0 && *s <= 1.0) => bad(format!("Hölder exponent {s} outside (0, 1]")),
            _ => Ok(()),
        }
    }

    pub fn to_fn(&self) -> RegressionFn {
        match self.clone() {
            FunctionSpec::Constant { value } => Arc::new(move |_: &[f64]| value),
            FunctionSpec::Linear { coef, intercept } => {
                Arc::new(move |y: &[f64]| intercept + coef.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            }
            FunctionSpec::Holder { scale, s, center } => Arc::new(move |y: &[f64]| {
                let d2: f64 = y.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
                scale * d2.sqrt().powf(s)
            }),
            FunctionSpec::Sine { amplitude, frequency } => Arc::new(move |y: &[f64]| amplitude * (frequency * y[0]).sin()),
        }
    }
}

/// Noise scale `s(X_{k-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScaleSpec {
    Constant { value: f64 },
    /// `base + slope * |y|`.
    Affine { base: f64, slope: f64 },
}

impl Default for ScaleSpec {
    fn default() -> Self {
        ScaleSpec::Constant { value: 1.0 }
    }
}

impl ScaleSpec {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScaleSpec::Constant { value } => value > 0.0 && value.is_finite(),
            ScaleSpec::Affine { base, slope } => base > 0.0 && base.is_finite() && slope >= 0.0 && slope.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("noise scale must be positive: {self:?}")))
        }
    }

    pub fn at(&self, y: &[f64]) -> f64 {
        match *self {
            ScaleSpec::Constant { value } => value,
            ScaleSpec::Affine { base, slope } => base + slope * y.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Per-observation cost, a function of the covariate `X_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostSpec {
    Constant { value: f64 },
    /// `base + slope * |y|`.
    Affine { base: f64, slope: f64 },
}

impl CostSpec {
    pub fn cost(&self, y: &[f64]) -> f64 {
        match *self {
            CostSpec::Constant { value } => value,
            CostSpec::Affine { base, slope } => base + slope * y.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            CostSpec::Constant { value } => value > 0.0 && value.is_finite(),
            CostSpec::Affine { base, slope } => base > 0.0 && base.is_finite() && slope >= 0.0 && slope.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("costs must be positive: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StoppingSpec {
    FixedN { n: usize },
    BudgetStop { cost: CostSpec, budget: f64 },
}

/// Decides, from the covariate `X_{k-1}` alone, whether observation `k` is taken.
/// Called once per step in order; the rule may keep state across calls.
pub trait StoppingRule {
    fn admit(&mut self, x_prev: &[f64]) -> bool;
}

pub struct FixedN {
    remaining: usize,
}

impl FixedN {
    pub fn new(n: usize) -> Self {
        Self { remaining: n }
    }
}

impl StoppingRule for FixedN {
    fn admit(&mut self, _x_prev: &[f64]) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        true
    }
}

/// `N = max { k : sum_{i <= k} cost(X_{i-1}) <= budget }`.
pub struct BudgetStop {
    cost: CostSpec,
    budget: f64,
    spent: f64,
}

impl StoppingRule for BudgetStop {
    fn admit(&mut self, x_prev: &[f64]) -> bool {
        let next = self.spent + self.cost.cost(x_prev);
        if next > self.budget {
            return false;
        }
        self.spent = next;
        true
    }
}

pub fn budget_stop(cost: CostSpec, budget: f64) -> Result<BudgetStop> {
    cost.validate()?;
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidConfig(format!("budget must be positive, got {budget}")));
    }
    Ok(BudgetStop { cost, budget, spent: 0.0 })
}

impl StoppingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StoppingSpec::FixedN { n: 0 } => Err(Error::InvalidConfig("n must be at least 1".into())),
            StoppingSpec::FixedN { .. } => Ok(()),
            StoppingSpec::BudgetStop { cost, budget } => budget_stop(cost, budget).map(|_| ()),
        }
    }

    pub fn rule(&self) -> Result<Box<dyn StoppingRule>> {
        self.validate()?;
        Ok(match *self {
            StoppingSpec::FixedN { n } => Box::new(FixedN::new(n)),
            StoppingSpec::BudgetStop { cost, budget } => Box::new(budget_stop(cost, budget)?),
        })
    }
}

fn default_dim() -> usize {
    1
}

fn default_guard() -> f64 {
    1e8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProcessKind {
    /// `X_{k-1}` i.i.d. with independent coordinates drawn from `design`.
    IidRegression {
        design: DesignLaw,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// `X_k = A X_{k-1} + c + diag(scales) xi_k`, observed as `Y_k = X_k[coordinate]`.
    AutoRegressive {
        matrix: Vec<Vec<f64>>,
        intercept: Vec<f64>,
        scales: Vec<f64>,
        coordinate: usize,
        start: Vec<f64>,
        #[serde(default = "default_guard")]
        guard: f64,
    },
    /// `X_k = rho X_{k-1} + sqrt(1 - rho^2) xi_k`, Gaussian, started from N(0, 1).
    MixingAr1 { rho: f64 },
    /// `X_k = X_{k-1} + drift + step_sd xi_k`, Gaussian steps.
    TransientWalk { start: f64, drift: f64, step_sd: f64 },
}

/// Declared local behaviour `P_X[x - h, x + h] ~ ell h^(tau + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PxDeclaration {
    pub x: f64,
    pub tau: f64,
    pub ell: f64,
    pub h0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Ignored by the autoregressive kind, whose regression function is its own drift.
    #[serde(default = "zero_fn")]
    pub f_true: FunctionSpec,
    #[serde(default = "gaussian_noise")]
    pub noise: NoiseLaw,
    #[serde(default)]
    pub scale: ScaleSpec,
    pub stopping: StoppingSpec,
    #[serde(default)]
    pub px_declared: Option<PxDeclaration>,
}

fn zero_fn() -> FunctionSpec {
    FunctionSpec::Constant { value: 0.0 }
}

fn gaussian_noise() -> NoiseLaw {
    NoiseLaw::Gaussian { sd: 1.0 }
}

impl ProcessSpec {
    pub fn dim(&self) -> usize {
        match &self.kind {
            ProcessKind::IidRegression { dim, .. } => *dim,
            ProcessKind::AutoRegressive { start, .. } => start.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        match &self.kind {
            ProcessKind::IidRegression { design, dim } => {
                design.validate()?;
                if *dim == 0 {
                    return Err(Error::InvalidConfig("dim must be at least 1".into()));
                }
            }
            ProcessKind::AutoRegressive { matrix, intercept, scales, coordinate, guard, .. } => {
                if d == 0
                    || matrix.len() != d
                    || matrix.iter().any(|r| r.len() != d)
                    || intercept.len() != d
                    || scales.len() != d
                {
                    return Err(Error::InvalidConfig("autoregression matrix, intercept, scales and start must agree in dimension".into()));
                }
                if *coordinate >= d {
                    return Err(Error::InvalidConfig(format!("coordinate {coordinate} out of range for dimension {d}")));
                }
                if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) || !(*guard > 0.0) {
                    return Err(Error::InvalidConfig("autoregression scales and guard must be positive".into()));
                }
            }
            ProcessKind::MixingAr1 { rho } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::InvalidConfig(format!("need |rho| < 1, got {rho}")));
                }
            }
            ProcessKind::TransientWalk { start, drift, step_sd } => {
                if !(start.is_finite() && drift.is_finite() && *step_sd >= 0.0 && step_sd.is_finite()) {
                    return Err(Error::InvalidConfig("invalid transient walk parameters".into()));
                }
            }
        }
        if !matches!(self.kind, ProcessKind::AutoRegressive { .. }) {
            self.f_true.validate(d)?;
            self.scale.validate()?;
        }
        self.noise.validate()?;
        self.stopping.validate()?;
        if let Some(decl) = self.px_declared {
            let px = self
                .px_form(decl.x)
                .ok_or_else(|| Error::InvalidConfig("px_declared needs a process with a closed-form design law".into()))?;
            check_px_declaration(&px, &decl)?;
        }
        Ok(())
    }

    /// Regression function attached to simulated paths.
    pub fn truth(&self) -> RegressionFn {
        match &self.kind {
            ProcessKind::AutoRegressive { matrix, intercept, coordinate, .. } => {
                let row = matrix[*coordinate].clone();
                let c = intercept[*coordinate];
                Arc::new(move |y: &[f64]| c + row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            }
            _ => self.f_true.to_fn(),
        }
    }

    /// Closed-form `h -> P_X[x - h, x + h]` of the (stationary) design, when known.
    pub fn px_form(&self, x: f64) -> Option<DesignAt> {
        match &self.kind {
            ProcessKind::IidRegression { design, dim: 1 } => Some(design.at(x)),
            ProcessKind::MixingAr1 { .. } => Some(DesignLaw::Gaussian { mean: 0.0, sd: 1.0 }.at(x)),
            _ => None,
        }
    }
}

/// Checks `P_X[I_h] / (ell h^(tau+1))` against `[0.99, 1.01]` on 50 log-spaced
/// bandwidths in `[1e-6 h0, h0]`.
pub fn check_px_declaration(px: &dyn IntervalProbability, decl: &PxDeclaration) -> Result<()> {
    if !(decl.h0 > 0.0 && decl.ell > 0.0 && decl.tau > -1.0) {
        return Err(Error::InvalidConfig(format!("invalid P_X declaration {decl:?}")));
    }
    for i in 0..50 {
        let h = decl.h0 * 10f64.powf(-6.0 * i as f64 / 49.0);
        let ratio = px.prob(h) / (decl.ell * h.powf(decl.tau + 1.0));
        if !(0.99..=1.01).contains(&ratio) {
            return Err(Error::InvalidConfig(format!(
                "declared (tau, ell) = ({}, {}) does not match P_X at h = {h:e}: ratio {ratio}",
                decl.tau, decl.ell
            )));
        }
    }
    Ok(())
}

/// Simulates one path from the stream `rng_for(seed, [])`.
pub fn simulate(spec: &ProcessSpec, seed: u64) -> Result<SamplePath> {
    let mut rule = spec.stopping.rule()?;
    simulate_with(spec, &mut rng_for(seed, &[]), rule.as_mut())
}

/// Simulates with an explicit generator and stopping rule.
pub fn simulate_with(spec: &ProcessSpec, rng: &mut ChaCha8Rng, rule: &mut dyn StoppingRule) -> Result<SamplePath> {
    spec.validate()?;
    let d = spec.dim();
    let f = spec.truth();
    let (mut xs, mut ys, mut sig) = (Vec::new(), Vec::new(), Vec::new());
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let mut x: Vec<f64> = match &spec.kind {
        ProcessKind::IidRegression { design, dim } => (0..*dim).map(|_| design.sample(rng)).collect(),
        ProcessKind::AutoRegressive { start, .. } => start.clone(),
        ProcessKind::MixingAr1 { .. } => vec![gauss(rng)],
        ProcessKind::TransientWalk { start, .. } => vec![*start],
    };
    let mut step = 0usize;
    while rule.admit(&x) {
        step += 1;
        xs.extend_from_slice(&x);
        match &spec.kind {
            ProcessKind::AutoRegressive { matrix, intercept, scales, coordinate, guard, .. } => {
                let next: Vec<f64> = (0..d)
                    .map(|i| {
                        let drift: f64 = intercept[i] + matrix[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                        drift + scales[i] * spec.noise.sample(rng)
                    })
                    .collect();
                if next.iter().any(|v| !(v.abs() <= *guard)) {
                    return Err(Error::ExplosiveChain { step, guard: *guard });
                }
                ys.push(next[*coordinate]);
                sig.push(scales[*coordinate]);
                x = next;
            }
            kind => {
                let s = spec.scale.at(&x);
                ys.push(f(&x) + s * spec.noise.sample(rng));
                sig.push(s);
                x = match kind {
                    ProcessKind::IidRegression { design, dim } => (0..*dim).map(|_| design.sample(rng)).collect(),
                    ProcessKind::MixingAr1 { rho } => vec![rho * x[0] + (1.0 - rho * rho).sqrt() * gauss(rng)],
                    ProcessKind::TransientWalk { drift, step_sd, .. } => vec![x[0] + drift + step_sd * gauss(rng)],
                    ProcessKind::AutoRegressive { .. } => unreachable!(),
                };
            }
        }
    }
    if ys.is_empty() {
        return Err(Error::InvalidSample("the stopping rule admitted no observation".into()));
    }
    Ok(SamplePath::new(d, xs, ys, sig)?.with_truth(f))
}

/// `eps_k = Y_k - f(X_{k-1})`.
pub fn martingale_residuals(sample: &SamplePath) -> Result<Vec<f64>> {
    let f = sample.truth().ok_or(Error::NoTruth)?;
    Ok(sample.covariates().zip(sample.y()).map(|(x, y)| y - f(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::mean_stderr;

    fn iid(n: usize) -> ProcessSpec {
        ProcessSpec {
            kind: ProcessKind::IidRegression { design: DesignLaw::Uniform { low: -1.0, high: 1.0 }, dim: 1 },
            f_true: FunctionSpec::Holder { scale: 1.0, s: 0.5, center: vec![0.0] },
            noise: NoiseLaw::Gaussian { sd: 1.0 },
            scale: ScaleSpec::Constant { value: 1.0 },
            stopping: StoppingSpec::FixedN { n },
            px_declared: None,
        }
    }

    fn normal_cdf(x: f64) -> f64 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn noiseless_constant_gives_zero_responses() {
        let spec = ProcessSpec {
            f_true: FunctionSpec::Constant { value: 0.0 },
            noise: NoiseLaw::Gaussian { sd: 0.0 },
            ..iid(50)
        };
        let s = simulate(&spec, 1).unwrap();
        assert!(s.y().iter().all(|&y| y == 0.0));
        assert!(martingale_residuals(&s).unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn fixed_n_and_reproducibility() {
        let a = simulate(&iid(123), 5).unwrap();
        let b = simulate(&iid(123), 5).unwrap();
        assert_eq!(a.n_stop(), 123);
        assert_eq!(a.x_flat(), b.x_flat());
        assert_eq!(a.y(), b.y());
        assert_ne!(simulate(&iid(123), 6).unwrap().y(), a.y());
    }

    #[test]
    fn unit_scale_residuals_are_the_innovations() {
        let spec = iid(100);
        let s = simulate(&spec, 8).unwrap();
        // Replay the stream: design draw, then innovation, per step.
        let mut rng = rng_for(8, &[]);
        let law = DesignLaw::Uniform { low: -1.0, high: 1.0 };
        let mut innovations = Vec::new();
        let _ = law.sample(&mut rng);
        for _ in 0..100 {
            innovations.push(spec.noise.sample(&mut rng));
            let _ = law.sample(&mut rng);
        }
        let r = martingale_residuals(&s).unwrap();
        for (a, b) in r.iter().zip(&innovations) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn residual_mean_is_clt_small() {
        let n = 100_000;
        let s = simulate(&iid(n), 21).unwrap();
        let r = martingale_residuals(&s).unwrap();
        let m = r.iter().sum::<f64>() / n as f64;
        assert!(m.abs() <= 4.0 / (n as f64).sqrt());
        let adapted: Vec<f64> = s.covariates().zip(&r).map(|(x, e)| e * x[0].signum()).collect();
        assert!(mean_stderr(&adapted).0.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn mixing_ar1_marginal_is_standard_gaussian() {
        let n = 100_000;
        let spec = ProcessSpec { kind: ProcessKind::MixingAr1 { rho: 0.5 }, ..iid(n) };
        let s = simulate(&spec, 3).unwrap();
        let mut x = s.x_flat().to_vec();
        x.sort_by(f64::total_cmp);
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = normal_cdf(v);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.02, "KS distance {ks}");
        // Long-run variance of the AR(1) mean is (1 + rho)/(1 - rho) / n.
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 * (3.0 / n as f64).sqrt());
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        // Var of the sample variance: 2 (1 + rho^2)/(1 - rho^2) / n.
        assert!((var - 1.0).abs() <= 4.0 * (2.0 * 1.25 / 0.75 / n as f64).sqrt());
    }

    #[test]
    fn px_declarations() {
        let ok = ProcessSpec { px_declared: Some(PxDeclaration { x: 0.0, tau: 0.0, ell: 1.0, h0: 1.0 }), ..iid(10) };
        assert!(ok.validate().is_ok());
        let wrong = ProcessSpec { px_declared: Some(PxDeclaration { x: 0.0, tau: 1.0, ell: 1.0, h0: 1.0 }), ..iid(10) };
        assert!(wrong.validate().is_err());
        let ar = ProcessSpec {
            kind: ProcessKind::MixingAr1 { rho: 0.5 },
            px_declared: Some(PxDeclaration { x: 0.0, tau: 0.0, ell: 2.0 / (2.0 * std::f64::consts::PI).sqrt(), h0: 0.2 }),
            ..iid(10)
        };
        assert!(ar.validate().is_ok());
    }

    #[test]
    fn budget_examples() {
        let mut r = budget_stop(CostSpec::Constant { value: 1.0 }, 10.5).unwrap();
        assert_eq!((0..100).take_while(|_| r.admit(&[0.0])).count(), 10);
        let mut r = budget_stop(CostSpec::Constant { value: 0.3 }, 7.0).unwrap();
        assert_eq!((0..100).take_while(|_| r.admit(&[0.0])).count(), 23);
        assert!(budget_stop(CostSpec::Constant { value: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn state_dependent_budget_matches_replay() {
        let cost = CostSpec::Affine { base: 0.5, slope: 2.0 };
        let spec = ProcessSpec { stopping: StoppingSpec::BudgetStop { cost, budget: 40.0 }, ..iid(1) };
        let s = simulate(&spec, 4).unwrap();
        let mut total = 0.0;
        let mut n = 0;
        for x in s.covariates() {
            total += cost.cost(x);
            assert!(total <= 40.0);
            n += 1;
        }
        assert_eq!(n, s.n_stop());
        // The next covariate would have broken the budget; re-simulate one step further.
        let longer = simulate(&ProcessSpec { stopping: StoppingSpec::FixedN { n: n + 1 }, ..spec.clone() }, 4).unwrap();
        let last = longer.covariate(n);
        assert!(total + cost.cost(last) > 40.0);
        assert_eq!(&longer.x_flat()[..n], s.x_flat());
    }

    struct Spy {
        seen: Vec<Vec<f64>>,
        limit: usize,
    }

    impl StoppingRule for Spy {
        fn admit(&mut self, x_prev: &[f64]) -> bool {
            self.seen.push(x_prev.to_vec());
            self.seen.len() <= self.limit
        }
    }

    #[test]
    fn stopping_rule_only_sees_the_past() {
        let spec = ProcessSpec { kind: ProcessKind::TransientWalk { start: 0.0, drift: 0.1, step_sd: 1.0 }, ..iid(1) };
        let mut spy = Spy { seen: Vec::new(), limit: 30 };
        let s = simulate_with(&spec, &mut rng_for(2, &[]), &mut spy).unwrap();
        assert_eq!(s.n_stop(), 30);
        // Decision k was made having seen exactly X_0..X_{k-1}, one at a time.
        for (k, seen) in spy.seen.iter().take(30).enumerate() {
            assert_eq!(seen.as_slice(), s.covariate(k));
        }
        assert_eq!(spy.seen.len(), 31);
    }

    #[test]
    fn autoregression_and_guard() {
        let spec = ProcessSpec {
            kind: ProcessKind::AutoRegressive {
                matrix: vec![vec![0.5, 0.1], vec![0.0, 0.3]],
                intercept: vec![0.0, 1.0],
                scales: vec![1.0, 0.5],
                coordinate: 0,
                start: vec![0.0, 0.0],
                guard: 1e8,
            },
            ..iid(500)
        };
        let s = simulate(&spec, 1).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(s.sigma().iter().all(|&v| v == 1.0));
        for k in 0..499 {
            assert_eq!(s.y()[k], s.covariate(k + 1)[0]);
        }
        let blowup = ProcessSpec {
            kind: ProcessKind::AutoRegressive {
                matrix: vec![vec![3.0]],
                intercept: vec![0.0],
                scales: vec![1.0],
                coordinate: 0,
                start: vec![1.0],
                guard: 1e6,
            },
            ..iid(500)
        };
        assert!(matches!(simulate(&blowup, 1), Err(Error::ExplosiveChain { .. })));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = ProcessSpec {
            stopping: StoppingSpec::BudgetStop { cost: CostSpec::Constant { value: 2.0 }, budget: 9.0 },
            ..iid(3)
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: ProcessSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let minimal: ProcessSpec = serde_json::from_str(
            r#"{"kind":{"type":"mixing_ar1","rho":0.5},"stopping":{"type":"fixed_n","n":4}}"#,
        )
        .unwrap();
        assert_eq!(simulate(&minimal, 0).unwrap().n_stop(), 4);
    }
}
