//! Campaign runner: configuration, simulation, estimation and report tables.

pub mod config;
pub mod error;
pub mod estimate;
pub mod output;
pub mod rates;
pub mod simulate;
pub mod stability;
pub mod stats;

use std::path::{Path, PathBuf};

use config::{CampaignConfig, Format};
use error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    TailRisk,
    Rates,
    VerifyStability,
}

/// Runs one command on the current rayon pool and returns the files written.
pub fn run(command: Command, cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    match command {
        Command::Simulate => simulate::cmd_simulate(cfg, out, formats),
        Command::Estimate => estimate::cmd_estimate(cfg, out, formats),
        Command::TailRisk => estimate::cmd_tail_risk(cfg, out, formats),
        Command::Rates => rates::cmd_rates(cfg, out, formats),
        Command::VerifyStability => stability::cmd_verify_stability(cfg, out, formats),
    }
}
