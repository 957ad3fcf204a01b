use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::config::{SamplerConfig, SrForm, Structure};
use super::gaussian::{
    update_beta, update_gamma_gg, update_gamma_sr, update_missing, update_phi_gg, update_phi_sr,
    update_sr,
};
use super::probit::{update_rho_gg, update_theta};
use super::state::{ChainDraw, ChainState, Model, Proposal, ScanFlags};
use crate::error::{Error, Result};
use crate::model::{
    linear_predictor, probit_innovation_from, ArCoefficients, BetaLayout, DyadPanel, Family,
    InnovationCov, ModelParameters, SrEffects,
};
use crate::numerics::{Mat2, RngStream};
use crate::posterior::{AcceptanceSummary, ChainMeta, PosteriorChain};
use crate::prior::PriorSpec;

/// Least squares on the observed cells ignoring random effects, with a tiny
/// ridge so rank-deficient designs still give an answer.
fn least_squares(panel: &DyadPanel, target: &[f64], layout: BetaLayout) -> Vec<f64> {
    let p = panel.covariate_count();
    let tn = panel.times();
    let nb = layout.len(tn, p);
    let mut xtx = DMatrix::<f64>::zeros(nb, nb);
    let mut xty = DVector::<f64>::zeros(nb);
    for c in panel.observed_cells() {
        let (i, j, t) = panel.cell_coords(c);
        let o = layout.offset(t, p);
        let x = panel.covariate_row(i, j, t);
        for k in 0..p {
            xty[o + k] += x[k] * target[c];
            for l in 0..p {
                xtx[(o + k, o + l)] += x[k] * x[l];
            }
        }
    }
    let ridge = 1e-8 * (1.0 + xtx.diagonal().amax());
    for k in 0..nb {
        xtx[(k, k)] += ridge;
    }
    match xtx.cholesky() {
        Some(ch) => ch.solve(&xty).iter().copied().collect(),
        None => vec![0.0; nb],
    }
}

/// Starting state: least-squares `beta`, zero effects and AR coefficients,
/// and innovation variances scaled by the least-squares residual variance.
/// Missing Gaussian responses start at their fitted values; the latent
/// `theta` starts at `+-0.5` on the side of the observed outcome.
pub fn initial_state(panel: &DyadPanel, structure: &Structure, layout: BetaLayout) -> ChainState {
    let a = panel.actors();
    let tn = panel.times();
    let p = panel.covariate_count();
    let family = panel.family();
    let y = panel.response_values();
    let beta = match family {
        Family::Gaussian => least_squares(panel, y, layout),
        Family::Binary => vec![0.0; layout.len(tn, p)],
    };
    let eta = linear_predictor(panel, &beta, layout).expect("beta sized from panel");
    let obs = panel.observed_cells();
    let var = match family {
        Family::Gaussian if !obs.is_empty() => {
            let ss: f64 = obs.iter().map(|&c| (y[c] - eta[c]) * (y[c] - eta[c])).sum();
            (ss / obs.len() as f64).max(1e-3)
        }
        _ => 1.0,
    };
    let has_sr = structure.sr != SrForm::Absent;
    let mut innov = InnovationCov {
        gamma_sr: Mat2::identity() * if has_sr { 0.25 * var } else { 1.0 },
        gamma_g2: if has_sr { 0.5 * var } else { var },
        lambda_gg: 0.0,
    };
    let rho_gg = match family {
        Family::Gaussian => None,
        Family::Binary => {
            innov.gamma_sr = Mat2::identity() * 0.25;
            innov.gamma_g2 = 1.0;
            Some(0.0)
        }
    };
    let z = (0..panel.cell_count())
        .map(|c| {
            let (i, j, _) = panel.cell_coords(c);
            if i == j {
                0.0
            } else if !panel.is_observed(c) {
                eta[c]
            } else {
                match family {
                    Family::Gaussian => y[c],
                    Family::Binary if y[c] > 0.5 => 0.5,
                    Family::Binary => -0.5,
                }
            }
        })
        .collect();
    ChainState {
        params: ModelParameters {
            beta,
            beta_layout: layout,
            covariates: p,
            ar: ArCoefficients::zero(),
            innov,
            rho_gg,
            sr: SrEffects::zeros(a, tn),
        },
        z,
    }
}

fn proposal<R: Rng + ?Sized>(config: &SamplerConfig, step: f64, rng: &mut R) -> Proposal {
    if rng.random::<f64>() < config.gibbs_vs_randomwalk_probability {
        Proposal::SemiConjugate
    } else {
        Proposal::RandomWalk(step)
    }
}

/// One full scan. Gaussian: steps 1-7. Binary: latent `theta`, steps 1-5,
/// then `rho_gg`.
pub fn scan<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ScanFlags> {
    let mut f = ScanFlags::fixed();
    let family = model.family();
    if family == Family::Binary {
        f.theta = update_theta(state, model, rng)?;
    }
    f.beta = update_beta(state, model, rng)?;
    f.sr = update_sr(state, model, rng)?;
    let kind = proposal(config, config.rw_step_phi, rng);
    f.phi_sr = update_phi_sr(state, model, kind, rng)?;
    let kind = proposal(config, config.rw_step_phi, rng);
    f.phi_gg = update_phi_gg(state, model, kind, rng)?;
    let kind = proposal(config, config.rw_step_gamma, rng);
    f.gamma_sr = update_gamma_sr(state, model, kind, rng)?;
    match family {
        Family::Gaussian => {
            let kind = proposal(config, config.rw_step_gamma, rng);
            f.gamma_gg = update_gamma_gg(state, model, kind, rng)?;
            f.missing = update_missing(state, model, rng)?;
        }
        Family::Binary => {
            f.rho_gg = update_rho_gg(state, model, config.rho_halfwidth, rng)?;
            sync_probit_innovation(&mut state.params);
        }
    }
    Ok(f)
}

/// Keeps the stored `gamma_g2`, `lambda_gg` equal to the values implied by
/// `(phi_g, phi_gg, rho_gg)`.
pub(crate) fn sync_probit_innovation(params: &mut ModelParameters) {
    let inn = probit_innovation_from(params.ar.phi_g, params.ar.phi_gg, params.rho_gg.unwrap_or(0.0));
    params.innov.gamma_g2 = inn.gamma_g2;
    params.innov.lambda_gg = inn.lambda_gg();
}

fn check_inputs(panel: &DyadPanel, prior: &PriorSpec, config: &SamplerConfig) -> Result<()> {
    config.validate()?;
    if prior.family != panel.family() {
        return Err(Error::ConfigInvalid(format!(
            "prior is for the {} family but the panel is {}",
            prior.family.as_str(),
            panel.family().as_str()
        )));
    }
    let nb = config
        .beta_layout
        .len(panel.times(), panel.covariate_count());
    if prior.beta_mean.len() != nb || prior.beta_cov.dim() != nb {
        return Err(Error::ConfigInvalid(format!(
            "beta prior has dimension {}, model needs {nb}",
            prior.beta_mean.len()
        )));
    }
    Ok(())
}

/// Runs a chain for either family from [`initial_state`].
pub fn run_chain(panel: &DyadPanel, prior: &PriorSpec, config: &SamplerConfig) -> Result<PosteriorChain> {
    check_inputs(panel, prior, config)?;
    let state = initial_state(panel, &config.structure, config.beta_layout);
    run_chain_from(panel, prior, config, state)
}

/// [`run_chain`] restricted to binary panels.
pub fn run_chain_probit(
    panel: &DyadPanel,
    prior: &PriorSpec,
    config: &SamplerConfig,
) -> Result<PosteriorChain> {
    if panel.family() != Family::Binary {
        return Err(Error::ConfigInvalid("probit sampler needs a binary panel".into()));
    }
    run_chain(panel, prior, config)
}

/// Runs a chain from a given state. A numeric failure aborts with the scan
/// index and the last good parameters attached.
pub fn run_chain_from(
    panel: &DyadPanel,
    prior: &PriorSpec,
    config: &SamplerConfig,
    mut state: ChainState,
) -> Result<PosteriorChain> {
    check_inputs(panel, prior, config)?;
    let model = Model {
        panel,
        prior,
        structure: config.structure,
    };
    let mut rng = RngStream::new(config.seed, 0);
    let missing = panel.missing_cells();
    let mut acceptance = AcceptanceSummary::default();
    let mut draws = Vec::with_capacity(config.kept_draws());
    let keep_latent = config.store_latent && panel.family() == Family::Binary;
    for s in 1..=config.total_scans {
        let before = state.params.clone();
        let flags = scan(&mut state, &model, config, &mut rng).map_err(|e| Error::ChainAborted {
            scan: s,
            source: Box::new(e),
            state: Box::new(before),
        })?;
        acceptance.record(&flags);
        if s > config.burn_in && (s - config.burn_in) % config.thin == 0 {
            draws.push(ChainDraw {
                scan: s,
                params: state.params.clone(),
                imputed: missing.iter().map(|&c| state.z[c]).collect(),
                latent: keep_latent.then(|| state.z.clone()),
                flags,
            });
        }
    }
    Ok(PosteriorChain {
        draws,
        meta: ChainMeta {
            config: config.clone(),
            family: panel.family(),
            fingerprint: panel.fingerprint(),
            labels: panel.labels().to_vec(),
            covariate_names: panel.covariate_names().to_vec(),
            times: panel.times(),
            missing_cells: missing,
            acceptance,
        },
    })
}
