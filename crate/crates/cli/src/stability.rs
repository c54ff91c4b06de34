//! Monte Carlo stability campaign over noise laws, scale rules and stopping rules.

use std::path::{Path, PathBuf};

use lepski_core::seed::derive_seed;
use lepski_core::stability::{report_from_terminals, rule_label, simulate_terminals, Regularization, StabilityReport};

use crate::config::{CampaignConfig, Format};
use crate::error::{CliError, CliResult};
use crate::output::write_table;

const STABILITY_TAG: u64 = 0x5354_4142;

/// One report per block, scale rule, stopping rule, `lambda` and regularization.
/// Terminals are shared across `lambda` and `a` within a cell.
pub fn stability_reports(cfg: &CampaignConfig) -> CliResult<Vec<StabilityReport>> {
    let st = cfg.stability.as_ref().ok_or_else(|| CliError::Config("missing `stability`".into()))?;
    let mut out = Vec::new();
    for (b, block) in st.blocks.iter().enumerate() {
        let noise = block.noise.spec()?;
        for (i, scales) in block.scales.iter().enumerate() {
            for (j, stop) in block.stops.iter().enumerate() {
                let seed = derive_seed(cfg.master_seed, &[STABILITY_TAG, b as u64, i as u64, j as u64]);
                let terminals = simulate_terminals(&noise, scales, stop, st.n_rep, seed);
                let label = rule_label(scales, stop);
                for &lambda in &block.lambdas {
                    let regs = block
                        .a_values
                        .iter()
                        .map(|&a| Regularization::Single(a))
                        .chain(block.uniform.iter().map(|u| Regularization::Uniform { a0: u.a0, a1: u.a1 }));
                    for reg in regs {
                        out.push(report_from_terminals(&noise, &terminals, lambda, reg, label.clone(), seed)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Writes `stability.<ext>`; any violated bound turns into exit code 3 after the table is on disk.
pub fn cmd_verify_stability(cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    let reports = stability_reports(cfg)?;
    for r in reports.iter().filter(|r| r.censored_warning()) {
        eprintln!(
            "warning: {} (alpha {}, lambda {}, a {}) censored {:.2}% of paths at the step cap",
            r.rule,
            r.alpha,
            r.lambda,
            r.a,
            100.0 * r.censor_rate
        );
    }
    let written = write_table(out, "stability", &reports, formats)?;
    check_reports(&reports)?;
    Ok(written)
}

pub fn check_reports(reports: &[StabilityReport]) -> CliResult<()> {
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::StabilityRed { failed, total: reports.len() });
    }
    Ok(())
}
