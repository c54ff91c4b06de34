use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lepski_cli::config::{CampaignConfig, Format, TailConfig};
use lepski_cli::error::{CliError, CliResult};
use lepski_cli::{run, Command};

#[derive(Parser)]
#[command(name = "lepski", version, about = "Adaptive bandwidth selection experiments on dependent data")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate sample paths for every (n, rep) cell.
    Simulate(Common),
    /// Select the bandwidth and report oracle quantities per sample.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Sample CSV files to analyse instead of simulating.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
    /// Tail probabilities of the normalized risk.
    TailRisk {
        #[command(flatten)]
        common: Common,
        /// Comma-separated thresholds, overriding `tail.t_grid`.
        #[arg(long, value_delimiter = ',')]
        t_grid: Option<Vec<f64>>,
    },
    /// Random and deterministic rates along the ladder.
    Rates(Common),
    /// Monte Carlo check of the exponential stability bounds.
    VerifyStability(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "LEPSKI_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "LEPSKI_JOBS")]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn execute(cli: Cli) -> CliResult<()> {
    let (command, common, inputs, t_grid) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c, None, None),
        Sub::Estimate { common, inputs } => (Command::Estimate, common, Some(inputs), None),
        Sub::TailRisk { common, t_grid } => (Command::TailRisk, common, None, t_grid),
        Sub::Rates(c) => (Command::Rates, c, None, None),
        Sub::VerifyStability(c) => (Command::VerifyStability, c, None, None),
    };
    let mut cfg = CampaignConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(f) = common.format {
        cfg.formats = vec![f];
    }
    if let Some(inputs) = inputs.filter(|v| !v.is_empty()) {
        cfg.inputs = inputs;
    }
    if let Some(t_grid) = t_grid {
        cfg.tail = Some(TailConfig { t_grid });
    }
    cfg.validate()?;
    let out = common.out.unwrap_or_else(|| cfg.outputs.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let written = pool.install(|| run(command, &cfg, &out, &cfg.formats))?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
