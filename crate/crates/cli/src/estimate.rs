//! Bandwidth selection, oracle quantities and tail-risk tables.

use std::fs;
use std::path::{Path, PathBuf};

use lepski_core::lepski::{grid_estimates, select_with_estimates};
use lepski_core::rates::{empirical_bias_modulus, modulus_bar, oracle_bandwidth, omega_prime_event, ModulusSpec};
use lepski_core::{Error, GridConfig, SamplePath, SelectionResult};
use serde::Serialize;

use crate::config::{CampaignConfig, Format, ModulusConfig};
use crate::error::{CliError, CliResult};
use crate::output::write_table;
use crate::simulate::{map_cells, Cell};

/// Everything the estimate and tail-risk commands report for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub selection: Option<SelectionResult>,
    pub h_star: Option<f64>,
    pub wbar_h_star: Option<f64>,
    pub omega_prime: bool,
    pub f_x: Option<f64>,
    pub risk: Option<f64>,
    pub error: Option<&'static str>,
}

pub fn analyze(sample: &SamplePath, grid: &GridConfig, modulus: &ModulusConfig) -> CliResult<Analysis> {
    let mut a = Analysis {
        selection: None,
        h_star: None,
        wbar_h_star: None,
        omega_prime: false,
        f_x: None,
        risk: None,
        error: None,
    };
    let g = match grid_estimates(sample, grid) {
        Ok(g) => g,
        Err(Error::GridEmpty) => {
            a.error = Some("grid_empty");
            return Ok(a);
        }
        Err(e) => return Err(e.into()),
    };
    let sel = select_with_estimates(&g.profile, &g.estimates, grid);
    a.f_x = sample.truth().map(|f| f(&grid.x_point));
    if let (Some(fh), Some(fx)) = (sel.f_hat, a.f_x) {
        a.risk = Some((fh - fx).abs());
    }
    let spec = match modulus.holder_spec(grid)? {
        Some(s) => Some(s),
        None if sample.truth().is_some() => Some(ModulusSpec::explicit(empirical_bias_modulus(sample, grid)?, grid)),
        None => None,
    };
    match spec {
        Some(spec) => {
            a.h_star = oracle_bandwidth(&g.profile, &spec, grid);
            a.wbar_h_star = a.h_star.map(|h| modulus_bar(&spec, h, grid.h0));
            a.omega_prime = omega_prime_event(&g.profile, &spec, grid);
            if !a.omega_prime {
                a.error = Some("omega_prime_failed");
            }
        }
        None => a.error = Some("no_truth"),
    }
    if !sel.defined {
        a.error = Some("anchor_undefined");
    }
    a.selection = Some(sel);
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub source: String,
    pub n: usize,
    pub rep: usize,
    pub seed: Option<u64>,
    pub n_stop: usize,
    pub h_hat: Option<f64>,
    pub j_hat: Option<usize>,
    pub f_hat: Option<f64>,
    pub h_u0: Option<f64>,
    pub h_star: Option<f64>,
    pub wbar_h_star: Option<f64>,
    pub f_x: Option<f64>,
    pub risk: Option<f64>,
    pub omega_prime: bool,
    pub error: String,
    #[serde(flatten)]
    pub params: GridParams,
}

/// Grid parameters repeated on every row so outputs are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridParams {
    pub master_seed: u64,
    pub x_point: String,
    pub h0: f64,
    pub q: f64,
    pub b: f64,
    pub nu: f64,
    pub u0: f64,
    pub delta0: f64,
    pub alpha0: f64,
    pub j_max: usize,
}

impl GridParams {
    pub fn new(g: &GridConfig, master_seed: u64) -> Self {
        Self {
            master_seed,
            x_point: g.x_point.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
            h0: g.h0,
            q: g.q,
            b: g.b,
            nu: g.nu,
            u0: g.u0,
            delta0: g.delta0,
            alpha0: g.alpha0,
            j_max: g.j_max,
        }
    }
}

fn estimate_row(source: String, n: usize, rep: usize, seed: Option<u64>, sample: &SamplePath, a: Analysis, params: GridParams) -> EstimateRow {
    let sel = a.selection.as_ref();
    EstimateRow {
        source,
        n,
        rep,
        seed,
        n_stop: sample.n_stop(),
        h_hat: sel.and_then(|s| s.h_hat),
        j_hat: sel.and_then(|s| s.j_hat),
        f_hat: sel.and_then(|s| s.f_hat),
        h_u0: sel.and_then(|s| s.h_u0),
        h_star: a.h_star,
        wbar_h_star: a.wbar_h_star,
        f_x: a.f_x,
        risk: a.risk,
        omega_prime: a.omega_prime,
        error: a.error.unwrap_or("").to_string(),
        params,
    }
}

pub fn all_cells(cfg: &CampaignConfig) -> CliResult<Vec<(usize, usize)>> {
    Ok(cfg.ladder()?.iter().flat_map(|&n| (0..cfg.n_rep).map(move |r| (n, r))).collect())
}

/// One row per simulated cell, or per input file when `inputs` is set.
pub fn estimate_rows(cfg: &CampaignConfig) -> CliResult<Vec<EstimateRow>> {
    let grid = cfg.grid()?;
    let modulus = cfg.modulus()?;
    let params = GridParams::new(grid, cfg.master_seed);
    if !cfg.inputs.is_empty() {
        return cfg
            .inputs
            .iter()
            .enumerate()
            .map(|(i, path)| {
                let sample = read_sample(path)?;
                let a = analyze(&sample, grid, modulus)?;
                Ok(estimate_row(path.display().to_string(), sample.n_stop(), i, None, &sample, a, params.clone()))
            })
            .collect();
    }
    map_cells(cfg, &all_cells(cfg)?, |c: Cell| {
        let a = analyze(&c.sample, grid, modulus)?;
        Ok(estimate_row("simulated".into(), c.n, c.rep, Some(c.seed), &c.sample, a, params.clone()))
    })
}

fn read_sample(path: &Path) -> CliResult<SamplePath> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    SamplePath::read_csv(file).map_err(|e| match e {
        Error::Io(io) => CliError::io(path, io),
        Error::Csv(source) => CliError::Csv { path: path.to_path_buf(), source },
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

pub fn cmd_estimate(cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    let rows = estimate_rows(cfg)?;
    write_table(out, "estimate", &rows, formats)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub n: usize,
    pub t: f64,
    pub empirical_prob: f64,
    pub stderr: f64,
    pub n_eff: usize,
    pub n_rep: usize,
    #[serde(flatten)]
    pub params: GridParams,
}

/// Per-cell ratio `|f_hat(H_hat) - f(x)| / W̄(H*)` on `Ω'`, `None` off it.
pub fn tail_ratios(cfg: &CampaignConfig) -> CliResult<Vec<(usize, Option<f64>)>> {
    let grid = cfg.grid()?;
    let modulus = cfg.modulus()?;
    map_cells(cfg, &all_cells(cfg)?, |c: Cell| {
        if c.sample.truth().is_none() {
            return Err(CliError::Config("tail-risk needs the true regression function".into()));
        }
        let a = analyze(&c.sample, grid, modulus)?;
        let ratio = match (a.omega_prime, a.risk, a.wbar_h_star) {
            (true, Some(r), Some(w)) => Some(r / w),
            _ => None,
        };
        Ok((c.n, ratio))
    })
}

/// `P[{|f_hat(H_hat) - f(x)| >= t W̄(H*)} ∩ Ω']` over the t grid, per ladder entry.
pub fn tail_table(cfg: &CampaignConfig, t_grid: &[f64]) -> CliResult<Vec<TailRow>> {
    let ratios = tail_ratios(cfg)?;
    let params = GridParams::new(cfg.grid()?, cfg.master_seed);
    let mut rows = Vec::new();
    for &n in cfg.ladder()? {
        let cell: Vec<Option<f64>> = ratios.iter().filter(|(m, _)| *m == n).map(|(_, r)| *r).collect();
        let n_eff = cell.iter().flatten().count();
        if n_eff < 100 {
            return Err(CliError::InsufficientOmegaPrime { n, n_eff });
        }
        let total = cell.len() as f64;
        for &t in t_grid {
            let hits = cell.iter().flatten().filter(|&&r| r >= t).count() as f64;
            let p = hits / total;
            rows.push(TailRow {
                n,
                t,
                empirical_prob: p,
                stderr: (p * (1.0 - p) / total).sqrt(),
                n_eff,
                n_rep: cell.len(),
                params: params.clone(),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_tail_risk(cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    let t_grid = &cfg.tail.as_ref().ok_or_else(|| CliError::Config("missing `tail.t_grid`".into()))?.t_grid;
    let rows = tail_table(cfg, t_grid)?;
    write_table(out, "tail_risk", &rows, formats)
}
