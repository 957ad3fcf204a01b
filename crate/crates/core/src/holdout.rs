//! Submodel dispatch and holdout prediction.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{BetaLayout, DyadPanel, Family};
use crate::posterior::{median_imputations, PosteriorChain};
use crate::prior::PriorHyper;
use crate::sampler::{run_chain, SamplerConfig, Submodel};

/// Everything needed to fit one submodel to a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub submodel: Submodel,
    pub beta_layout: BetaLayout,
    /// Run length and proposal tuning. Its structure and layout are
    /// overwritten from `submodel` and `beta_layout`.
    pub sampler: SamplerConfig,
    pub prior: PriorHyper,
}

impl FitConfig {
    pub fn new(submodel: Submodel, sampler: SamplerConfig) -> Self {
        Self {
            submodel,
            beta_layout: sampler.beta_layout,
            sampler,
            prior: PriorHyper::default(),
        }
    }
}

/// The panel a submodel actually sees: intercept-only submodels drop the
/// covariates.
pub fn design_panel(panel: &DyadPanel, submodel: Submodel) -> DyadPanel {
    if submodel.intercept_only() {
        panel.with_intercept_only()
    } else {
        panel.clone()
    }
}

/// Fits `config.submodel` to the panel.
pub fn fit(panel: &DyadPanel, config: &FitConfig) -> Result<PosteriorChain> {
    let design = design_panel(panel, config.submodel);
    let mut sampler = config.sampler.clone();
    sampler.structure = config.submodel.structure();
    sampler.beta_layout = config.beta_layout;
    let n_beta = config.beta_layout.len(design.times(), design.covariate_count());
    let prior = config.prior.build(design.family(), n_beta)?;
    run_chain(&design, &prior, &sampler)
}

/// Draws `round(fraction * observed)` of the observed cells to hold out.
/// Returned cells are sorted.
pub fn holdout_mask<R: Rng + ?Sized>(panel: &DyadPanel, fraction: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::ConfigInvalid(format!(
            "holdout fraction must be in (0, 0.5], got {fraction}"
        )));
    }
    let observed = panel.observed_cells();
    let k = libm::round(fraction * observed.len() as f64) as usize;
    if k == 0 {
        return Err(Error::ConfigInvalid("holdout set is empty".into()));
    }
    let mut cells: Vec<usize> = sample(rng, observed.len(), k).into_iter().map(|i| observed[i]).collect();
    cells.sort_unstable();
    Ok(cells)
}

/// Mean squared error of posterior-median predictions at the held-out cells.
/// `truth` is the unmasked panel; the chain must have been fitted to the
/// masked one.
pub fn holdout_error(truth: &DyadPanel, chain: &PosteriorChain, held_out: &[usize]) -> Result<f64> {
    let medians = median_imputations(chain)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for &c in held_out {
        let k = medians
            .binary_search_by_key(&c, |&(cell, _)| cell)
            .map_err(|_| Error::ConfigInvalid(format!("cell {c} was not imputed")))?;
        let y = truth.response_values()[c];
        let d = medians[k].1 - y;
        sum += d * d;
        n += 1;
    }
    Ok(sum / n as f64)
}

/// One row of the model comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutRow {
    pub submodel: Submodel,
    pub mse: f64,
    pub held_out: usize,
}

/// Masks one holdout set, fits every configuration to the masked panel and
/// scores each. Fits run in sequence.
pub fn holdout_mse<R: Rng + ?Sized>(
    panel: &DyadPanel,
    configs: &[FitConfig],
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<HoldoutRow>> {
    let (masked, cells) = prepare_holdout(panel, fraction, rng)?;
    configs
        .iter()
        .map(|cfg| {
            let chain = fit(&masked, cfg)?;
            Ok(HoldoutRow {
                submodel: cfg.submodel,
                mse: holdout_error(panel, &chain, &cells)?,
                held_out: cells.len(),
            })
        })
        .collect()
}

/// Checks the family and returns the masked panel with its holdout cells.
pub fn prepare_holdout<R: Rng + ?Sized>(
    panel: &DyadPanel,
    fraction: f64,
    rng: &mut R,
) -> Result<(DyadPanel, Vec<usize>)> {
    if panel.family() != Family::Gaussian {
        return Err(Error::ConfigInvalid("holdout comparison needs a gaussian panel".into()));
    }
    let cells = holdout_mask(panel, fraction, rng)?;
    Ok((panel.with_masked(&cells), cells))
}
