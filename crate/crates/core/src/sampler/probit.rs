//! Latent-variable and correlation updates for the binary family.

use alloc::vec;

use rand::Rng;

use super::gaussian::{conditional_1d, imputation_conditional};
use super::state::{accept, gg_loglik, gg_process, ChainState, Model, StepOutcome};
use crate::error::Result;
use crate::model::{linear_predictor, probit_innovation_from, ArProcess};
use crate::numerics::{standard_normal, truncated_normal_sample, Sign};

/// Gibbs update of the latent `theta`, one pair-time at a time: `theta_ij`
/// then `theta_ji`, each from its univariate conditional truncated to the
/// side of zero given by the observed outcome. Missing outcomes are drawn
/// without truncation.
pub fn update_theta<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    rng: &mut R,
) -> Result<StepOutcome> {
    let panel = model.panel;
    let tn = panel.times();
    let process = gg_process(&state.params, model.family())?;
    let eta = linear_predictor(panel, &state.params.beta, state.params.beta_layout)?;
    let mut g = state.residuals_with(panel, &eta);
    let mut path = vec![0.0; 2 * tn];
    for (i, j) in panel.pairs() {
        for u in 0..tn {
            path[2 * u] = g[panel.cell(i, j, u)];
            path[2 * u + 1] = g[panel.cell(j, i, u)];
        }
        for t in 0..tn {
            let (m, v) = imputation_conditional(&process, &path, t);
            for (k, (s, r)) in [(i, j), (j, i)].into_iter().enumerate() {
                let c = panel.cell(s, r, t);
                let (cm, cv) = conditional_1d(m, &v, k, path[2 * t + 1 - k]);
                let base = eta[c] + state.params.sr.sender(s, t) + state.params.sr.receiver(r, t);
                let theta = match panel.response(s, r, t) {
                    Some(y) => {
                        let side = if y > 0.5 { Sign::Positive } else { Sign::Negative };
                        truncated_normal_sample(base + cm, cv, side, rng)?
                    }
                    None => base + cm + libm::sqrt(cv) * standard_normal(rng),
                };
                state.z[c] = theta;
                g[c] = theta - base;
                path[2 * t + k] = g[c];
            }
        }
    }
    Ok(StepOutcome::GibbsExact)
}

/// MH update of `rho_gg` with a uniform proposal of the given half-width.
/// Proposals with `|rho| >= 1` or a non-PD implied innovation are rejected.
pub fn update_rho_gg<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    halfwidth: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    if !model.structure.gg_reciprocal {
        return Ok(StepOutcome::Fixed);
    }
    let cur = state.params.rho_gg.unwrap_or(0.0);
    let new = cur + halfwidth * (2.0 * rng.random::<f64>() - 1.0);
    let (phi_g, phi_gg) = (state.params.ar.phi_g, state.params.ar.phi_gg);
    let inn = probit_innovation_from(phi_g, phi_gg, new);
    if !(new.abs() < 1.0) || !inn.positive_definite {
        return Ok(StepOutcome::Rejected);
    }
    let g = state.residuals(model.panel)?;
    let phi = state.params.ar.phi_gg_matrix();
    let target = |rho: f64| -> f64 {
        let lp = model.prior.log_prior_rho(rho);
        let gamma = probit_innovation_from(phi_g, phi_gg, rho).matrix();
        match ArProcess::new(phi, gamma) {
            Ok(p) => lp + gg_loglik(model.panel, &g, &p),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let t_new = target(new);
    if t_new == f64::NEG_INFINITY {
        return Ok(StepOutcome::Rejected);
    }
    if accept(t_new - target(cur), rng) {
        state.params.rho_gg = Some(new);
        let inn = probit_innovation_from(phi_g, phi_gg, new);
        state.params.innov.gamma_g2 = inn.gamma_g2;
        state.params.innov.lambda_gg = inn.lambda_gg();
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}
