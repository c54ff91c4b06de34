//! Sample generation for every `(n, rep)` cell of a campaign.

use std::fs;
use std::path::{Path, PathBuf};

use lepski_core::dgp::simulate;
use lepski_core::seed::derive_seed;
use lepski_core::SamplePath;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CampaignConfig, Format};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_json, write_table};

/// Seed of cell `(n, rep)` under `master`.
pub fn cell_seed(master: u64, n: usize, rep: usize) -> u64 {
    derive_seed(master, &[n as u64, rep as u64])
}

pub struct Cell {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub sample: SamplePath,
}

/// All cells in `(n, rep)` order, simulated on the current rayon pool.
pub fn simulate_cells(cfg: &CampaignConfig) -> CliResult<Vec<Cell>> {
    let cells: Vec<(usize, usize)> = cfg.ladder()?.iter().flat_map(|&n| (0..cfg.n_rep).map(move |r| (n, r))).collect();
    map_cells(cfg, &cells, Ok)
}

/// Simulates each cell and applies `f`, preserving cell order.
pub fn map_cells<T: Send, F>(cfg: &CampaignConfig, cells: &[(usize, usize)], f: F) -> CliResult<Vec<T>>
where
    F: Fn(Cell) -> CliResult<T> + Sync,
{
    let specs = cfg
        .ladder()?
        .iter()
        .map(|&n| cfg.process_at(n).map(|p| (n, p)))
        .collect::<CliResult<Vec<_>>>()?;
    cells
        .par_iter()
        .map(|&(n, rep)| {
            let spec = &specs.iter().find(|(m, _)| *m == n).expect("ladder entry").1;
            let seed = cell_seed(cfg.master_seed, n, rep);
            let sample = simulate(spec, seed)?;
            f(Cell { n, rep, seed, sample })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Serialize)]
struct SampleJson<'a> {
    dim: usize,
    n_stop: usize,
    seed: u64,
    x: &'a [f64],
    y: &'a [f64],
    sigma: &'a [f64],
}

#[derive(Serialize)]
struct ManifestRow {
    n: usize,
    rep: usize,
    seed: u64,
    n_stop: usize,
    file: String,
    master_seed: u64,
}

/// Writes `samples/n{n}_rep{rep}.{csv,json}` for every cell plus a manifest.
pub fn cmd_simulate(cfg: &CampaignConfig, out: &Path, formats: &[Format]) -> CliResult<Vec<PathBuf>> {
    let cells = simulate_cells(cfg)?;
    let dir = out.join("samples");
    ensure_dir(&dir)?;
    let mut written = Vec::new();
    let mut manifest = Vec::new();
    for c in &cells {
        for &f in formats {
            let name = format!("n{}_rep{}.{}", c.n, c.rep, f.extension());
            let path = dir.join(&name);
            match f {
                Format::Csv => {
                    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                    c.sample.write_csv(file).map_err(|e| match e {
                        lepski_core::Error::Io(io) => CliError::io(&path, io),
                        other => CliError::Core(other),
                    })?;
                }
                Format::Json => {
                    let body = SampleJson {
                        dim: c.sample.dim(),
                        n_stop: c.sample.n_stop(),
                        seed: c.seed,
                        x: c.sample.x_flat(),
                        y: c.sample.y(),
                        sigma: c.sample.sigma(),
                    };
                    write_json(&path, &body)?;
                }
            }
            manifest.push(ManifestRow {
                n: c.n,
                rep: c.rep,
                seed: c.seed,
                n_stop: c.sample.n_stop(),
                file: format!("samples/{name}"),
                master_seed: cfg.master_seed,
            });
            written.push(path);
        }
    }
    written.extend(write_table(out, "samples_manifest", &manifest, &[Format::Csv])?);
    Ok(written)
}
