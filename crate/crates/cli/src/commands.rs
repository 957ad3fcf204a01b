//! The subcommands, callable without the argument parser.

use std::path::{Path, PathBuf};

use lsr_core::holdout::{fit, holdout_error, prepare_holdout, FitConfig};
use lsr_core::model::{DyadPanel, Family};
use lsr_core::numerics::RngStream;
use lsr_core::posterior::PosteriorChain;
use lsr_core::sampler::Submodel;
use lsr_core::simulate::{simulate_panel, SimulatedPanel};

use crate::chain_io;
use crate::config::{read_design, write_truth, ChainFormat, RunConfig};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::panel_io;
use crate::summary;

/// Command-line values that take precedence over the run config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub model: Option<Submodel>,
    pub family: Option<Family>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: Option<&Path>, o: &Overrides) -> Result<RunConfig> {
    let mut c = match path {
        Some(p) => RunConfig::parse(&read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = o.seed {
        c.sampler.seed = s;
    }
    if let Some(m) = o.model {
        c.submodel = m;
    }
    if let Some(f) = o.family {
        c.family = f;
    }
    if let Some(out) = &o.out {
        c.out = Some(out.clone());
    }
    Ok(c)
}

fn out_dir(c: &RunConfig) -> Result<&Path> {
    c.out
        .as_deref()
        .ok_or_else(|| Error::ConfigInvalid("no output directory; pass --out or set out in the config".into()))
}

fn fit_config(c: &RunConfig, submodel: Submodel) -> FitConfig {
    FitConfig {
        submodel,
        beta_layout: c.beta_layout,
        sampler: c.sampler_for(submodel),
        prior: c.prior.clone(),
    }
}

/// Simulates a panel from a design file with the given seed, writing
/// `panel.csv` and `truth.txt` into `out`.
pub fn simulate(design_path: &Path, seed: u64, out: &Path) -> Result<SimulatedPanel> {
    let base = design_path.parent().unwrap_or(Path::new("."));
    let design = read_design(&read_to_string(design_path)?, base)?;
    let sim = simulate_panel(&design, &mut RngStream::new(seed, 0))?;
    write_atomic(&out.join("panel.csv"), panel_io::write_panel(&sim.panel).as_bytes())?;
    write_atomic(&out.join("truth.txt"), write_truth(&sim.truth).as_bytes())?;
    Ok(sim)
}

fn chain_file(format: ChainFormat) -> &'static str {
    match format {
        ChainFormat::Text => "chain.csv",
        ChainFormat::Binary => "chain.bin",
    }
}

/// Writes every summary table of a chain into `out`.
pub fn write_summaries(chain: &PosteriorChain, out: &Path) -> Result<()> {
    for (name, body) in summary::all_tables(chain)? {
        write_atomic(&out.join(name), body.as_bytes())?;
    }
    Ok(())
}

/// Fits the configured model and writes the chain, its summaries and the
/// resolved config.
pub fn fit_panel(config: &RunConfig, data: &Path) -> Result<PosteriorChain> {
    let out = out_dir(config)?;
    let panel = panel_io::read_panel_file(data, config.family)?;
    let chain = fit(&panel, &fit_config(config, config.submodel))?;
    chain_io::write_chain(&out.join(chain_file(config.chain_format)), &chain, config.chain_format)?;
    // the output location is left out so the file depends only on the inputs
    let resolved = RunConfig { out: None, ..config.clone() };
    write_atomic(&out.join("config.txt"), resolved.to_text().as_bytes())?;
    if !chain.is_empty() {
        write_summaries(&chain, out)?;
    }
    Ok(chain)
}

/// One row of `mse.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictRow {
    pub submodel: Submodel,
    pub mse: f64,
    pub held_out: usize,
}

/// Holds out `holdout_fraction` of the observed cells, fits every model in
/// `config.models` to the rest concurrently and scores posterior-median
/// predictions. The mask uses stream 1 of the seed; model `k` in the list
/// runs its chain with seed `seed + 1 + k`.
pub fn predict(config: &RunConfig, panel: &DyadPanel) -> Result<Vec<PredictRow>> {
    if config.holdout_fraction == 0.0 {
        return Err(Error::ConfigInvalid("predict needs holdout_fraction > 0".into()));
    }
    let seed = config.sampler.seed;
    let (masked, cells) = prepare_holdout(panel, config.holdout_fraction, &mut RngStream::new(seed, 1))?;
    let results: Vec<Result<PredictRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = config
            .models
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let mut fc = fit_config(config, m);
                fc.sampler.seed = seed.wrapping_add(1 + k as u64);
                let (masked, cells) = (&masked, &cells);
                s.spawn(move || -> Result<PredictRow> {
                    let chain = fit(masked, &fc)?;
                    Ok(PredictRow {
                        submodel: m,
                        mse: holdout_error(panel, &chain, cells)?,
                        held_out: cells.len(),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    });
    results.into_iter().collect()
}

pub fn format_mse(rows: &[PredictRow]) -> String {
    let mut out = String::from("model,mse,held_out\n");
    for r in rows {
        out.push_str(&format!("{},{:?},{}\n", r.submodel, r.mse, r.held_out));
    }
    out
}

pub fn predict_file(config: &RunConfig, data: &Path) -> Result<Vec<PredictRow>> {
    let out = out_dir(config)?;
    let panel = panel_io::read_panel_file(data, config.family)?;
    let rows = predict(config, &panel)?;
    write_atomic(&out.join("mse.csv"), format_mse(&rows).as_bytes())?;
    Ok(rows)
}

pub fn summarize(chain_path: &Path, out: &Path) -> Result<()> {
    write_summaries(&chain_io::read_chain(chain_path)?, out)
}

/// Rewrites a chain in the other encoding.
pub fn convert(input: &Path, output: &Path, format: ChainFormat) -> Result<()> {
    chain_io::write_chain(output, &chain_io::read_chain(input)?, format)
}
