//! Random and deterministic rates along the sample-size ladder.

use std::path::{Path, PathBuf};

use lepski_core::dgp::ScaleSpec;
use lepski_core::rates::{rate_report, RateReport};
use serde::Serialize;

use crate::config::{CampaignConfig, Format, ModulusConfig};
use crate::error::{CliError, CliResult};
use crate::estimate::all_cells;
use crate::output::write_table;
use crate::simulate::{map_cells, Cell};
use crate::stats::{fit_line, median};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    /// Ladder entry; differs from `n` under a budget stopping rule.
    pub ladder_n: usize,
    pub rep: usize,
    #[serde(flatten)]
    pub report: RateReport,
    pub contained: bool,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub n: usize,
    pub n_rep: usize,
    pub h_w: Option<f64>,
    pub rate_det: Option<f64>,
    pub median_h_w_empirical: Option<f64>,
    pub median_rate_random: Option<f64>,
    /// Share of replications on `Ω0` with the ratio inside `[1/4, 4]`.
    pub containment: f64,
    pub omega0_fail: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub quantity: String,
    /// Slope against `log(sigma^2 / n)`.
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub intercept: Option<f64>,
    pub expected: Option<f64>,
}

fn noise_scale(cfg: &CampaignConfig) -> CliResult<f64> {
    match cfg.process()?.scale {
        ScaleSpec::Constant { value } => Ok(value),
        _ => Err(CliError::Config("rates need a constant noise scale".into())),
    }
}

pub fn rate_rows(cfg: &CampaignConfig) -> CliResult<Vec<RateRow>> {
    let grid = cfg.grid()?;
    let spec = match cfg.modulus()? {
        ModulusConfig::Bias => return Err(CliError::Config("rates need a holder modulus".into())),
        m => m.holder_spec(grid)?.expect("holder modulus"),
    };
    noise_scale(cfg)?;
    let px = match grid.x_point.as_slice() {
        [x] => cfg.process()?.px_form(*x),
        _ => None,
    };
    map_cells(cfg, &all_cells(cfg)?, |c: Cell| {
        let mut report = rate_report(&c.sample, grid, &spec, px.as_ref().map(|p| p as _))?;
        report.seed = Some(c.seed);
        Ok(RateRow { ladder_n: c.n, rep: c.rep, contained: report.contained(), report, master_seed: cfg.master_seed })
    })
}

pub fn summarize(cfg: &CampaignConfig, rows: &[RateRow]) -> CliResult<Vec<RateSummary>> {
    let ladder = cfg.ladder()?;
    Ok(ladder
        .iter()
        .map(|&n| {
            let cell: Vec<&RateRow> = rows.iter().filter(|r| r.ladder_n == n).collect();
            let total = cell.len() as f64;
            let randoms: Vec<f64> = cell.iter().filter_map(|r| r.report.rate_random).collect();
            let hs: Vec<f64> = cell.iter().filter_map(|r| r.report.h_w_empirical).collect();
            let det = cell.iter().find_map(|r| r.report.h_w.zip(r.report.rate_det));
            RateSummary {
                n,
                n_rep: cell.len(),
                h_w: det.map(|d| d.0),
                rate_det: det.map(|d| d.1),
                median_h_w_empirical: median(&hs),
                median_rate_random: median(&randoms),
                containment: cell.iter().filter(|r| r.contained).count() as f64 / total,
                omega0_fail: cell.iter().filter(|r| !r.report.omega0).count() as f64 / total,
                error: if det.is_none() { "too_few_samples".into() } else { String::new() },
            }
        })
        .collect())
}

type Getter = fn(&RateSummary) -> Option<f64>;

/// Log-log slopes of the summaries against `sigma^2 / n`.
pub fn fit_rates(cfg: &CampaignConfig, summary: &[RateSummary]) -> CliResult<Vec<RateFit>> {
    let sigma = noise_scale(cfg)?;
    let s = match cfg.modulus()? {
        ModulusConfig::Holder { s, .. } => Some(*s),
        ModulusConfig::Bias => None,
    };
    let tau = cfg.process()?.px_declared.map(|d| d.tau);
    let h_exp = s.zip(tau).map(|(s, t)| 1.0 / (2.0 * s + 1.0 + t));
    let quantities: [(&str, Getter, Option<f64>); 4] = [
        ("h_w", |r| r.h_w, h_exp),
        ("rate_det", |r| r.rate_det, h_exp.zip(s).map(|(h, s)| h * s)),
        ("h_w_empirical", |r| r.median_h_w_empirical, h_exp),
        ("rate_random", |r| r.median_rate_random, h_exp.zip(s).map(|(h, s)| h * s)),
    ];
    Ok(quantities
        .iter()
        .map(|(name, get, expected)| {
            let (x, y): (Vec<f64>, Vec<f64>) = summary
                .iter()
                .filter_map(|r| get(r).filter(|v| *v > 0.0).map(|v| ((sigma * sigma / r.n as f64).ln(), v.ln())))
                .unzip();
            let fit = fit_line(&x, &y);
            RateFit {
                quantity: name.to_string(),
                slope: fit.map(|f| f.slope),
                stderr: fit.map(|f| f.slope_stderr),
                intercept: fit.map(|f| f.intercept),
                expected: *expected,
            }
        })
        .collect())
}

pub fn cmd_rates(cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    let rows = rate_rows(cfg)?;
    let summary = summarize(cfg, &rows)?;
    let fit = fit_rates(cfg, &summary)?;
    let mut written = write_table(out, "rates_reps", &rows, formats)?;
    written.extend(write_table(out, "rates", &summary, formats)?);
    written.extend(write_table(out, "rates_fit", &fit, formats)?);
    Ok(written)
}
