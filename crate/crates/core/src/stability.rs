//! Constants and Monte Carlo checks for the regularized self-normalized
//! martingale `sqrt(a) M_T / (a + V_T)`.
//!
//! Paths are `M_n = sum_k s_{k-1} zeta_k`, `V_n = sum_k s_{k-1}^2` with an
//! adapted scale rule and a stopping rule that only looks at the past.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, GridConfig};
use crate::estimator::martingale_part;
use crate::sample::SamplePath;
use crate::seed::rng_for;

const LN2: f64 = std::f64::consts::LN_2;

/// `Gamma_lambda = (1 + 2 gamma) / (2 (mu - lambda))` for `0 <= lambda < mu / (2 (1 + gamma))`.
pub fn gamma_lambda(mu: f64, gamma: f64, lambda: f64) -> Result<f64> {
    check_mu_gamma(mu, gamma)?;
    let upper = mu / (2.0 * (1.0 + gamma));
    if !(lambda >= 0.0 && lambda < upper) {
        return Err(Error::LambdaOutOfRange { lambda, range: format!("[0, {upper})") });
    }
    Ok((1.0 + 2.0 * gamma) / (2.0 * (mu - lambda)))
}

/// Sub-Gaussian stability constant `c_lambda`.
pub fn c_lambda(mu: f64, gamma: f64, lambda: f64) -> Result<f64> {
    let g = gamma_lambda(mu, gamma, lambda)?;
    let x = lambda * g;
    Ok((x / (2.0 * (1.0 - 2.0 * x))).exp() * x.exp_m1())
}

/// Sub-exponential stability constant `c'_lambda`, for `|lambda| < mu`.
pub fn c_prime_lambda(mu: f64, gamma: f64, lambda: f64) -> Result<f64> {
    check_mu_gamma(mu, gamma)?;
    if !(lambda.abs() < mu) {
        return Err(Error::LambdaOutOfRange { lambda, range: format!("(-{mu}, {mu})") });
    }
    let k = (gamma - 1.0) * lambda * lambda / (mu * mu);
    Ok((gamma - 1.0) * lambda * lambda * k.exp() * (2.0 * LN2 + 2.0 * k).cosh() / (mu * mu))
}

fn check_mu_gamma(mu: f64, gamma: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")));
    }
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok(())
}

/// Centered laws for the increments `zeta_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseLaw {
    /// `sd * N(0, 1)`.
    Gaussian {
        #[serde(default = "one")]
        sd: f64,
    },
    /// `±1` with equal probability.
    TwoPoint,
    /// Laplace(1) conditioned on `[-bound, bound]`.
    TruncatedLaplace { bound: f64 },
}

fn one() -> f64 {
    1.0
}

impl NoiseLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseLaw::Gaussian { sd } => sd.is_finite() && sd >= 0.0,
            NoiseLaw::TwoPoint => true,
            NoiseLaw::TruncatedLaplace { bound } => bound.is_finite() && bound > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid noise law {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sd } => {
                let z: f64 = rng.sample(StandardNormal);
                sd * z
            }
            NoiseLaw::TwoPoint => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseLaw::TruncatedLaplace { bound } => {
                let u: f64 = rng.random();
                let r = -(u * (-bound).exp_m1()).ln_1p();
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
        }
    }

    /// `E zeta^2`.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sd } => sd * sd,
            NoiseLaw::TwoPoint => 1.0,
            NoiseLaw::TruncatedLaplace { bound: b } => {
                (2.0 - (-b).exp() * (b * b + 2.0 * b + 2.0)) / (-(-b).exp_m1())
            }
        }
    }

    /// Density of the law; `None` for atoms.
    fn density(&self, z: f64) -> Option<f64> {
        match *self {
            NoiseLaw::Gaussian { sd } if sd > 0.0 => {
                let t = z / sd;
                Some((-0.5 * t * t).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()))
            }
            NoiseLaw::TruncatedLaplace { bound } => {
                if z.abs() > bound {
                    Some(0.0)
                } else {
                    Some((-z.abs()).exp() / (-2.0 * (-bound).exp_m1()))
                }
            }
            _ => None,
        }
    }

    /// `E exp(mu |zeta|^alpha)`, `+inf` when it diverges.
    pub fn exp_moment(&self, alpha: u8, mu: f64) -> f64 {
        match (*self, alpha) {
            (NoiseLaw::Gaussian { sd }, 2) => {
                let k = 2.0 * mu * sd * sd;
                if k < 1.0 {
                    (1.0 - k).powf(-0.5)
                } else {
                    f64::INFINITY
                }
            }
            (NoiseLaw::Gaussian { sd }, _) => {
                let m = mu * sd;
                2.0 * (0.5 * m * m).exp() * std_normal_cdf(m)
            }
            (NoiseLaw::TwoPoint, _) => mu.exp(),
            (NoiseLaw::TruncatedLaplace { bound: b }, 1) => {
                if mu == 1.0 {
                    b / (-(-b).exp_m1())
                } else {
                    ((mu - 1.0) * b).exp_m1() / ((mu - 1.0) * -(-b).exp_m1())
                }
            }
            (law @ NoiseLaw::TruncatedLaplace { bound }, _) => {
                2.0 * simpson(|z| (mu * z * z).exp() * law.density(z).unwrap(), 0.0, bound, 20_000)
            }
        }
    }

    /// `E exp(m zeta^2 + rho zeta)`: closed form where available, otherwise
    /// composite Simpson quadrature.
    pub fn mixed_moment(&self, m: f64, rho: f64) -> f64 {
        match *self {
            NoiseLaw::Gaussian { sd } => {
                let k = 1.0 - 2.0 * m * sd * sd;
                if k <= 0.0 {
                    return f64::INFINITY;
                }
                (rho * rho * sd * sd / (2.0 * k)).exp() / k.sqrt()
            }
            NoiseLaw::TwoPoint => m.exp() * rho.cosh(),
            law @ NoiseLaw::TruncatedLaplace { bound } => {
                let f = |z: f64| (m * z * z + rho * z).exp() * law.density(z).unwrap();
                simpson(f, -bound, 0.0, 20_000) + simpson(f, 0.0, bound, 20_000)
            }
        }
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Increment law with its tail class: `E exp(mu |zeta|^alpha) <= gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub law: NoiseLaw,
    pub alpha: u8,
    pub mu: f64,
    pub gamma: f64,
}

impl NoiseSpec {
    /// Checks the tail-class claim against the exact moment.
    pub fn new(law: NoiseLaw, alpha: u8, mu: f64, gamma: f64) -> Result<Self> {
        let spec = Self { law, alpha, mu, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.alpha != 1 && self.alpha != 2 {
            return Err(Error::InvalidConfig(format!("alpha must be 1 or 2, got {}", self.alpha)));
        }
        check_mu_gamma(self.mu, self.gamma)?;
        let moment = self.law.exp_moment(self.alpha, self.mu);
        if !(moment <= self.gamma * (1.0 + 1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "E exp(mu |zeta|^alpha) = {moment} exceeds gamma = {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Standard Gaussian with the smallest admissible `gamma` for `(alpha, mu)`.
    pub fn gaussian(alpha: u8, mu: f64) -> Result<Self> {
        let law = NoiseLaw::Gaussian { sd: 1.0 };
        Self::new(law, alpha, mu, law.exp_moment(alpha, mu))
    }

    pub fn two_point(alpha: u8, mu: f64) -> Result<Self> {
        Self::new(NoiseLaw::TwoPoint, alpha, mu, mu.exp())
    }

    pub fn truncated_laplace(bound: f64, mu: f64) -> Result<Self> {
        let law = NoiseLaw::TruncatedLaplace { bound };
        Self::new(law, 1, mu, law.exp_moment(1, mu))
    }

    /// `c_mu` with `<M>_n <= c_mu V_n`.
    pub fn c_mu(&self) -> f64 {
        if self.alpha == 2 {
            LN2 / self.mu
        } else {
            2.0 / (self.mu * self.mu)
        }
    }

    /// Admissible range check for `lambda` in this tail class.
    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        self.bound(lambda).map(|_| ())
    }

    /// `1 + c_lambda` (alpha = 2) or `1 + c'_lambda` (alpha = 1).
    pub fn bound(&self, lambda: f64) -> Result<f64> {
        if self.alpha == 2 {
            if lambda == 0.0 {
                gamma_lambda(self.mu, self.gamma, 0.0)?;
                return Ok(1.0);
            }
            Ok(1.0 + c_lambda(self.mu, self.gamma, lambda)?)
        } else {
            Ok(1.0 + c_prime_lambda(self.mu, self.gamma, lambda)?)
        }
    }

    /// The stability functional at one terminal value.
    pub fn functional(&self, lambda: f64, a: f64, m: f64, v: f64) -> f64 {
        let d = a + v;
        if self.alpha == 2 {
            (lambda * a * m * m / (d * d)).exp()
        } else {
            (lambda * a.sqrt() * m / d).cosh()
        }
    }
}

/// Predictable scale `s_{k-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ScaleRule {
    Zero,
    Constant { value: f64 },
    /// `low` on odd steps, `high` on even steps.
    Alternating { low: f64, high: f64 },
    /// `0.5 + |zeta_{k-1}|`, with `zeta_0 = 0`.
    RandomAdapted,
}

impl ScaleRule {
    fn next(&self, k: u64, prev_zeta: f64) -> f64 {
        match *self {
            ScaleRule::Zero => 0.0,
            ScaleRule::Constant { value } => value,
            ScaleRule::Alternating { low, high } => {
                if k % 2 == 1 {
                    low
                } else {
                    high
                }
            }
            ScaleRule::RandomAdapted => 0.5 + prev_zeta.abs(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ScaleRule::Zero => "zero",
            ScaleRule::Constant { .. } => "constant",
            ScaleRule::Alternating { .. } => "alternating",
            ScaleRule::RandomAdapted => "random_adapted",
        }
    }
}

/// Stopping rule for the martingale paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopRule {
    Fixed { n: u64 },
    /// `T = min { n : M_n >= c sqrt(V_n) } ∧ cap`.
    FirstCrossing { c: f64, cap: u64 },
    /// Stops after each step with probability `p` from an independent coin, capped.
    Randomized { p: f64, cap: u64 },
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StopRule::Fixed { n } => n >= 1,
            StopRule::FirstCrossing { c, cap } => c.is_finite() && c >= 0.0 && cap >= 1,
            StopRule::Randomized { p, cap } => p > 0.0 && p <= 1.0 && cap >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid stopping rule {self:?}")))
        }
    }

    pub fn label(&self) -> String {
        match *self {
            StopRule::Fixed { n } => format!("fixed_{n}"),
            StopRule::FirstCrossing { c, cap } => format!("first_crossing_c{c}_cap{cap}"),
            StopRule::Randomized { p, cap } => format!("randomized_p{p}_cap{cap}"),
        }
    }
}

/// `(M_T, V_T)` of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub m: f64,
    pub v: f64,
    pub steps: u64,
    /// The cap was reached before the stopping condition.
    pub censored: bool,
}

pub fn simulate_terminal(noise: &NoiseSpec, scales: &ScaleRule, stop: &StopRule, rng: &mut ChaCha8Rng) -> Terminal {
    let (mut m, mut v, mut prev) = (0.0, 0.0, 0.0);
    let cap = match *stop {
        StopRule::Fixed { n } => n,
        StopRule::FirstCrossing { cap, .. } | StopRule::Randomized { cap, .. } => cap,
    };
    for k in 1..=cap {
        let s = scales.next(k, prev);
        let z = noise.law.sample(rng);
        m += s * z;
        v += s * s;
        prev = z;
        let done = match *stop {
            StopRule::Fixed { .. } => false,
            StopRule::FirstCrossing { c, .. } => m >= 0.0 && m * m >= c * c * v,
            StopRule::Randomized { p, .. } => rng.random::<f64>() < p,
        };
        if done {
            return Terminal { m, v, steps: k, censored: false };
        }
    }
    Terminal { m, v, steps: cap, censored: !matches!(stop, StopRule::Fixed { .. }) }
}

/// Simulates `n_rep` independent terminals; replication `r` uses the stream
/// `(seed, [r])`, so the result does not depend on the worker count.
pub fn simulate_terminals(
    noise: &NoiseSpec,
    scales: &ScaleRule,
    stop: &StopRule,
    n_rep: usize,
    seed: u64,
) -> Vec<Terminal> {
    (0..n_rep)
        .into_par_iter()
        .map(|r| simulate_terminal(noise, scales, stop, &mut rng_for(seed, &[r as u64])))
        .collect()
}

/// Mean and standard error of the mean, summed in index order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Regularization of one report: a single `a` or a uniform range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regularization {
    Single(f64),
    Uniform { a0: f64, a1: f64 },
}

impl fmt::Display for Regularization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularization::Single(a) => write!(f, "{a}"),
            Regularization::Uniform { a0, a1 } => write!(f, "{a0}:{a1}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub alpha: u8,
    pub mu: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub a: String,
    pub rule: String,
    pub n_rep: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
    pub censor_rate: f64,
    pub seed: u64,
}

impl StabilityReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "alpha",
        "mu",
        "gamma",
        "lambda",
        "a",
        "rule",
        "n_rep",
        "estimate",
        "stderr",
        "bound",
        "pass",
        "censor_rate",
        "seed",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.alpha.to_string(),
            self.mu.to_string(),
            self.gamma.to_string(),
            self.lambda.to_string(),
            self.a.clone(),
            self.rule.clone(),
            self.n_rep.to_string(),
            self.estimate.to_string(),
            self.stderr.to_string(),
            self.bound.to_string(),
            self.pass.to_string(),
            self.censor_rate.to_string(),
            self.seed.to_string(),
        ]
    }

    /// The censoring rate exceeds 0.1%.
    pub fn censored_warning(&self) -> bool {
        self.censor_rate > 1e-3
    }
}

/// `sup_{a in [a0, a1]} a m^2 / (a + v)^2`, attained at `a = clamp(v, a0, a1)`.
pub fn sup_regularized_square(m: f64, v: f64, a0: f64, a1: f64) -> f64 {
    let a = v.clamp(a0, a1);
    a * m * m / ((a + v) * (a + v))
}

/// Evaluates the stability functional on precomputed terminals.
pub fn report_from_terminals(
    noise: &NoiseSpec,
    terminals: &[Terminal],
    lambda: f64,
    reg: Regularization,
    rule: String,
    seed: u64,
) -> Result<StabilityReport> {
    if terminals.is_empty() {
        return Err(Error::InvalidConfig("n_rep must be at least 1".into()));
    }
    let (values, bound): (Vec<f64>, f64) = match reg {
        Regularization::Single(a) => {
            check_a(a)?;
            (terminals.iter().map(|t| noise.functional(lambda, a, t.m, t.v)).collect(), noise.bound(lambda)?)
        }
        Regularization::Uniform { a0, a1 } => {
            check_a(a0)?;
            check_a(a1)?;
            if a0 > a1 {
                return Err(Error::InvalidConfig(format!("need a0 <= a1, got {a0} > {a1}")));
            }
            if noise.alpha != 2 {
                return Err(Error::InvalidConfig("the uniform bound is stated for alpha = 2".into()));
            }
            let b = noise.bound(lambda)? * (1.0 + (a1 / a0).ln());
            let vals = terminals
                .iter()
                .map(|t| (0.5 * lambda * sup_regularized_square(t.m, t.v, a0, a1)).exp())
                .collect();
            (vals, b)
        }
    };
    let (estimate, stderr) = mean_stderr(&values);
    let censored = terminals.iter().filter(|t| t.censored).count();
    Ok(StabilityReport {
        alpha: noise.alpha,
        mu: noise.mu,
        gamma: noise.gamma,
        lambda,
        a: reg.to_string(),
        rule,
        n_rep: terminals.len(),
        estimate,
        stderr,
        bound,
        pass: estimate + 3.0 * stderr <= bound,
        censor_rate: censored as f64 / terminals.len() as f64,
        seed,
    })
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("a must be positive, got {a}")))
    }
}

pub fn rule_label(scales: &ScaleRule, stop: &StopRule) -> String {
    format!("{}/{}", scales.label(), stop.label())
}

/// Monte Carlo estimate of `E exp(lambda a M_T^2 / (a + V_T)^2)` (alpha = 2)
/// or `E cosh(lambda sqrt(a) M_T / (a + V_T))` (alpha = 1) against its bound.
#[allow(clippy::too_many_arguments)]
pub fn mc_stability(
    noise: &NoiseSpec,
    scales: &ScaleRule,
    stop: &StopRule,
    a: f64,
    lambda: f64,
    n_rep: usize,
    seed: u64,
) -> Result<StabilityReport> {
    noise.validate()?;
    noise.check_lambda(lambda)?;
    stop.validate()?;
    let t = simulate_terminals(noise, scales, stop, n_rep, seed);
    report_from_terminals(noise, &t, lambda, Regularization::Single(a), rule_label(scales, stop), seed)
}

/// Monte Carlo estimate of `E sup_{a in [a0, a1]} exp((lambda/2) a M_T^2 / (a + V_T)^2)`
/// against `(1 + c_lambda)(1 + log(a1/a0))`.
#[allow(clippy::too_many_arguments)]
pub fn mc_uniform_stability(
    noise: &NoiseSpec,
    scales: &ScaleRule,
    stop: &StopRule,
    a0: f64,
    a1: f64,
    lambda: f64,
    n_rep: usize,
    seed: u64,
) -> Result<StabilityReport> {
    noise.validate()?;
    noise.check_lambda(lambda)?;
    stop.validate()?;
    let t = simulate_terminals(noise, scales, stop, n_rep, seed);
    report_from_terminals(noise, &t, lambda, Regularization::Uniform { a0, a1 }, rule_label(scales, stop), seed)
}

/// `sup_{i >= i0} psi_i^{-1/2} sup_{a in I(h_i)} Z(h_i, a psi_i)` on one sample,
/// with `I(h) = [u0^{-2}, delta0^{-2} (h/h0)^{-2 alpha0}]`. Zero when no grid
/// point with index `>= i0` is realized.
pub fn pi_statistic(sample: &SamplePath, cfg: &GridConfig, i0: usize) -> Result<f64> {
    let profile = match build_grid(sample, cfg) {
        Ok(p) => p,
        Err(Error::GridEmpty) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut sup: f64 = 0.0;
    for p in profile.points().iter().filter(|p| p.index >= i0) {
        let m = martingale_part(sample, &cfg.x_point, p.h)?;
        let lo = p.psi / (cfg.u0 * cfg.u0);
        let hi = p.psi * (p.h / cfg.h0).powf(-2.0 * cfg.alpha0) / (cfg.delta0 * cfg.delta0);
        let b = p.l.clamp(lo, hi.max(lo));
        let z = b.sqrt() * m.abs() / (b + p.l);
        sup = sup.max(z / p.psi.sqrt());
    }
    Ok(sup)
}

/// Frequency of `statistic > t` with its binomial standard error.
pub fn exceedance(stats: &[f64], t: f64) -> (f64, f64) {
    let n = stats.len() as f64;
    let p = stats.iter().filter(|&&s| s > t).count() as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Monte Carlo estimate of `pi(i0, t)` over an ensemble of samples.
pub fn empirical_pi(samples: &[SamplePath], cfg: &GridConfig, i0: usize, t: f64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig("empty ensemble".into()));
    }
    let stats = samples.iter().map(|s| pi_statistic(s, cfg, i0)).collect::<Result<Vec<_>>>()?;
    Ok(exceedance(&stats, t))
}

/// Both sides of `E exp(m zeta^2 + rho zeta) <= exp((1 + 2 gamma)(rho^2 + m) / (2 (mu - m)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The left side is computed exactly (Gaussian, two-point) or by quadrature.
pub fn check_lemma_moment(mu: f64, gamma: f64, m: f64, rho: f64, noise: &NoiseLaw) -> Result<MomentCheck> {
    check_mu_gamma(mu, gamma)?;
    if !(m >= 0.0 && m < mu) {
        return Err(Error::InvalidConfig(format!("m must lie in [0, mu), got {m}")));
    }
    let moment = noise.exp_moment(2, mu);
    if !(moment <= gamma * (1.0 + 1e-12)) {
        return Err(Error::InvalidConfig(format!("E exp(mu zeta^2) = {moment} exceeds gamma = {gamma}")));
    }
    let lhs = noise.mixed_moment(m, rho);
    let rhs = ((1.0 + 2.0 * gamma) * (rho * rho + m) / (2.0 * (mu - m))).exp();
    Ok(MomentCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) })
}

/// Checks `e^{A eta} cosh((1 - eta) z) - cosh(z) <= A eta e^{A eta} cosh(2 log 2 + 2A)`
/// on a uniform `n_eta x n_z` grid of `[0, 1] x [0, 2 log 2 + 2A + 10]`.
pub fn check_lemma_cosh_sup(a: f64, n_eta: usize, n_z: usize) -> Result<bool> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidConfig(format!("A must be positive, got {a}")));
    }
    if n_eta < 2 || n_z < 2 {
        return Err(Error::InvalidConfig("grid needs at least 2 points per axis".into()));
    }
    let z_max = 2.0 * LN2 + 2.0 * a + 10.0;
    let c = (2.0 * LN2 + 2.0 * a).cosh();
    let ok = (0..n_eta).into_par_iter().all(|i| {
        let eta = i as f64 / (n_eta - 1) as f64;
        let e = (a * eta).exp();
        let rhs = a * eta * e * c;
        (0..n_z).all(|k| {
            let z = z_max * k as f64 / (n_z - 1) as f64;
            let left = e * ((1.0 - eta) * z).cosh();
            let right = z.cosh();
            left - right <= rhs + 4.0 * f64::EPSILON * (left + right)
        })
    });
    Ok(ok)
}
