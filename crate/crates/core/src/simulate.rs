//! Forward simulation from the generative model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    check_stationary, linear_predictor, probit_innovation_from, ArCoefficients, ArProcess,
    BetaLayout, DyadPanel, Family, InnovationCov, ModelParameters, SrEffects,
};
use crate::numerics::{standard_normal, InverseGamma, InverseWishart, Mat2, Spd2, Vec2};
use crate::prior::PriorSpec;
use crate::sampler::{SrForm, Structure};

/// How covariate values are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateGenerator {
    /// Covariate `k` is the constant `values[k]` everywhere.
    Constant(Vec<f64>),
    /// Covariate 0 is an intercept; the rest are iid standard normal.
    StandardNormal,
    /// User-supplied values in the panel's cell layout, `[cell * p + k]`.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    pub actors: usize,
    pub times: usize,
    pub covariate_names: Vec<String>,
    pub covariates: CovariateGenerator,
    /// Truth. The sender/receiver effects are drawn, so `truth.sr` is
    /// ignored; for the binary family the innovation is derived from
    /// `(phi_g, phi_gg, rho_gg)`.
    pub truth: ModelParameters,
    pub family: Family,
    pub missing_fraction: f64,
}

/// A simulated panel with everything that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub panel: DyadPanel,
    pub truth: ModelParameters,
    /// Dyadic residuals `g`, in the panel's cell layout.
    pub residuals: Vec<f64>,
    /// The complete continuous response (Gaussian `y` or binary `theta`)
    /// before thresholding and masking.
    pub latent: Vec<f64>,
}

impl SimulationDesign {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::DesignInvalid(m));
        if self.actors < 2 || self.times < 1 {
            return bad(format!(
                "need at least 2 actors and 1 time point, got {} and {}",
                self.actors, self.times
            ));
        }
        let p = self.covariate_names.len();
        if self.truth.covariates != p {
            return bad(format!(
                "truth has {} covariates, design names {p}",
                self.truth.covariates
            ));
        }
        if self.truth.beta.len() != self.truth.beta_layout.len(self.times, p) {
            return bad("beta length does not match the layout".into());
        }
        match &self.covariates {
            CovariateGenerator::Constant(v) if v.len() != p => {
                return bad(format!("{} constants for {p} covariates", v.len()))
            }
            CovariateGenerator::Table(v) if v.len() != self.actors * self.actors * self.times * p => {
                return bad("covariate table has the wrong length".into())
            }
            CovariateGenerator::StandardNormal if p == 0 => {
                return bad("standard-normal covariates need an intercept column".into())
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad(format!("missing fraction {} not in [0, 1)", self.missing_fraction));
        }
        let st = check_stationary(&self.truth.ar);
        if !st.sr || !st.gg {
            return bad("true AR coefficients are not stationary".into());
        }
        if !self.truth.innov.gamma_sr_is_pd() {
            return bad("true Gamma_sr is not positive definite".into());
        }
        match self.family {
            Family::Gaussian if !self.truth.innov.gamma_gg_is_pd() => {
                bad("true Gamma_gg is not positive definite".into())
            }
            Family::Binary => match self.truth.rho_gg {
                Some(r)
                    if r.abs() < 1.0
                        && probit_innovation_from(self.truth.ar.phi_g, self.truth.ar.phi_gg, r)
                            .positive_definite =>
                {
                    Ok(())
                }
                _ => bad("binary design needs |rho_gg| < 1 with a PD innovation".into()),
            },
            _ => Ok(()),
        }
    }
}

fn ar_path<R: Rng + ?Sized>(process: &ArProcess, chol: &Spd2, times: usize, rng: &mut R, out: &mut [f64]) {
    let mut x = process
        .sigma0()
        .mul_chol(Vec2::new(standard_normal(rng), standard_normal(rng)));
    for t in 0..times {
        if t > 0 {
            x = process.phi() * x + chol.mul_chol(Vec2::new(standard_normal(rng), standard_normal(rng)));
        }
        out[2 * t] = x[0];
        out[2 * t + 1] = x[1];
    }
}

/// Draws sender/receiver paths per actor and residual paths per unordered
/// pair, each started from its stationary law. Residuals are returned in the
/// `A x A x T` cell layout with zeros on the diagonal.
pub fn simulate_effects<R: Rng + ?Sized>(
    ar: &ArCoefficients,
    innov: &InnovationCov,
    actors: usize,
    times: usize,
    rng: &mut R,
) -> Result<(SrEffects, Vec<f64>)> {
    let sr_proc = ArProcess::new(ar.phi_sr, innov.gamma_sr)?;
    let gg_proc = ArProcess::new(ar.phi_gg_matrix(), innov.gamma_gg())?;
    let mut sr = SrEffects::zeros(actors, times);
    for i in 0..actors {
        ar_path(&sr_proc, sr_proc.gamma(), times, rng, sr.actor_path_mut(i));
    }
    let mut g = vec![0.0; actors * actors * times];
    let mut path = vec![0.0; 2 * times];
    for i in 0..actors {
        for j in i + 1..actors {
            ar_path(&gg_proc, gg_proc.gamma(), times, rng, &mut path);
            for t in 0..times {
                g[(t * actors + i) * actors + j] = path[2 * t];
                g[(t * actors + j) * actors + i] = path[2 * t + 1];
            }
        }
    }
    Ok((sr, g))
}

/// Draws covariates, effects and responses, then masks a uniformly random
/// subset of `round(missing_fraction * A (A - 1) T)` responses.
pub fn simulate_panel<R: Rng + ?Sized>(design: &SimulationDesign, rng: &mut R) -> Result<SimulatedPanel> {
    design.validate()?;
    let (a, tn) = (design.actors, design.times);
    let p = design.covariate_names.len();
    let labels: Vec<String> = (1..=a).map(|k| format!("a{k}")).collect();
    let ncell = a * a * tn;
    let x: Vec<f64> = match &design.covariates {
        CovariateGenerator::Constant(v) => (0..ncell * p).map(|q| v[q % p]).collect(),
        CovariateGenerator::Table(v) => v.clone(),
        CovariateGenerator::StandardNormal => (0..ncell * p)
            .map(|q| if q % p == 0 { 1.0 } else { standard_normal(rng) })
            .collect(),
    };
    let mut truth = design.truth.clone();
    if design.family == Family::Binary {
        let inn = probit_innovation_from(truth.ar.phi_g, truth.ar.phi_gg, truth.rho_gg.unwrap_or(0.0));
        truth.innov.gamma_g2 = inn.gamma_g2;
        truth.innov.lambda_gg = inn.lambda_gg();
    }
    let (sr, g) = simulate_effects(&truth.ar, &truth.innov, a, tn, rng)?;
    truth.sr = sr;
    let template = DyadPanel::new(
        labels.clone(),
        tn,
        Family::Gaussian,
        design.covariate_names.clone(),
        vec![0.0; ncell],
        vec![false; ncell],
        x.clone(),
    )?;
    let latent = response_given(&template, &truth, &g)?;
    let off_diag: Vec<usize> = (0..ncell).filter(|&c| c / a % a != c % a).collect();
    let n_missing = libm::round(design.missing_fraction * off_diag.len() as f64) as usize;
    let mut observed = vec![false; ncell];
    for &c in &off_diag {
        observed[c] = true;
    }
    for k in sample_indices(rng, off_diag.len(), n_missing).into_iter() {
        observed[off_diag[k]] = false;
    }
    let y: Vec<f64> = match design.family {
        Family::Gaussian => latent.clone(),
        Family::Binary => latent.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect(),
    };
    let panel = DyadPanel::new(
        labels,
        tn,
        design.family,
        design.covariate_names.clone(),
        y,
        observed,
        x,
    )?;
    Ok(SimulatedPanel {
        panel,
        truth,
        residuals: g,
        latent,
    })
}

/// `x'beta + s_i + r_j + g` over all cells of `panel`.
pub fn response_given(panel: &DyadPanel, params: &ModelParameters, g: &[f64]) -> Result<Vec<f64>> {
    let eta = linear_predictor(panel, &params.beta, params.beta_layout)?;
    let a = panel.actors();
    let mut z = vec![0.0; panel.cell_count()];
    for t in 0..panel.times() {
        for i in 0..a {
            for j in 0..a {
                if i != j {
                    let c = panel.cell(i, j, t);
                    z[c] = eta[c] + params.sr.sender(i, t) + params.sr.receiver(j, t) + g[c];
                }
            }
        }
    }
    Ok(z)
}

/// Draws residual paths for every pair under `(Phi_gg, Gamma_gg)`, in the
/// cell layout of an `actors x actors x times` panel.
pub fn simulate_residuals<R: Rng + ?Sized>(
    phi_gg: &Mat2,
    gamma_gg: &Mat2,
    actors: usize,
    times: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let proc_ = ArProcess::new(*phi_gg, *gamma_gg)?;
    let mut g = vec![0.0; actors * actors * times];
    let mut path = vec![0.0; 2 * times];
    for i in 0..actors {
        for j in i + 1..actors {
            ar_path(&proc_, proc_.gamma(), times, rng, &mut path);
            for t in 0..times {
                g[(t * actors + i) * actors + j] = path[2 * t];
                g[(t * actors + j) * actors + i] = path[2 * t + 1];
            }
        }
    }
    Ok(g)
}

fn truncated_mvn<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &crate::numerics::SpdMatrix,
    free: &[usize],
    ok: impl Fn(&[f64]) -> bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    for _ in 0..100_000 {
        let d = crate::numerics::mvn_sample(mean, cov, rng)?;
        let mut v = vec![0.0; mean.len()];
        for &f in free {
            v[f] = d[f];
        }
        if ok(&v) {
            return Ok(v);
        }
    }
    Err(Error::NonstationaryCoefficients)
}

/// Draws a full parameter set, including sender/receiver effects, from the
/// prior restricted by `structure`. Coefficients restricted to zero are
/// zero; restricted normal priors are sampled by rejection, which needs a
/// proper, reasonably concentrated prior. Sampled free coordinates are drawn
/// jointly and the fixed ones discarded, so with a correlated prior
/// covariance the result differs from the conditional-at-zero restriction.
pub fn sample_prior<R: Rng + ?Sized>(
    prior: &PriorSpec,
    structure: &Structure,
    actors: usize,
    times: usize,
    layout: BetaLayout,
    covariates: usize,
    rng: &mut R,
) -> Result<ModelParameters> {
    let beta = crate::numerics::mvn_sample(&prior.beta_mean, &prior.beta_cov, rng)?;
    if beta.len() != layout.len(times, covariates) {
        return Err(Error::DimensionMismatch {
            expected: layout.len(times, covariates),
            found: beta.len(),
        });
    }
    let mut ar = ArCoefficients::zero();
    if structure.sr == SrForm::Ar {
        let v = truncated_mvn(
            &prior.phi_sr_mean,
            &prior.phi_sr_cov,
            &[0, 1, 2, 3],
            |v| crate::numerics::spectral_radius(&Mat2::new(v[0], v[1], v[2], v[3])) < 1.0,
            rng,
        )?;
        ar.phi_sr = Mat2::new(v[0], v[1], v[2], v[3]);
    }
    if structure.gg_temporal {
        let free: &[usize] = if structure.gg_reciprocal { &[0, 1] } else { &[0] };
        let v = truncated_mvn(
            &prior.phi_gg_mean,
            &prior.phi_gg_cov,
            free,
            |v| v[0].abs() + v[1].abs() < 1.0,
            rng,
        )?;
        ar.phi_g = v[0];
        ar.phi_gg = v[1];
    }
    // with stationary coefficients and |rho| < 1 the implied innovation is PD
    let rho = match prior.family {
        Family::Gaussian => None,
        Family::Binary if !structure.gg_reciprocal => Some(0.0),
        Family::Binary => loop {
            let r = prior.rho_mean + libm::sqrt(prior.rho_var) * standard_normal(rng);
            if r.abs() < 1.0 {
                break Some(r);
            }
        },
    };
    let gamma_sr = match structure.sr {
        SrForm::Absent => Mat2::identity(),
        _ => InverseWishart::new(prior.v_sr, prior.s_sr.clone())?
            .sample(rng)?
            .to_mat2(),
    };
    let gamma_sr = Mat2::new(gamma_sr[(0, 0)], gamma_sr[(0, 1)], gamma_sr[(0, 1)], gamma_sr[(1, 1)]);
    let (gamma_g2, lambda_gg) = match prior.family {
        Family::Binary => {
            let inn = probit_innovation_from(ar.phi_g, ar.phi_gg, rho.unwrap_or(0.0));
            (inn.gamma_g2, inn.lambda_gg())
        }
        Family::Gaussian if structure.gg_reciprocal => {
            let sa = InverseGamma::new(prior.alpha_a, prior.delta_a)?.sample(rng);
            let sb = InverseGamma::new(prior.alpha_b, prior.delta_b)?.sample(rng);
            crate::model::wong_transform(sa, sb)?
        }
        Family::Gaussian => (InverseGamma::new(prior.alpha_a, prior.delta_a)?.sample(rng), 0.0),
    };
    let innov = InnovationCov {
        gamma_sr,
        gamma_g2,
        lambda_gg,
    };
    let mut sr = SrEffects::zeros(actors, times);
    match structure.sr {
        SrForm::Absent => {}
        SrForm::Static => {
            let ch = Spd2::new(gamma_sr)?;
            for i in 0..actors {
                let v = ch.mul_chol(Vec2::new(standard_normal(rng), standard_normal(rng)));
                for t in 0..times {
                    sr.set(i, t, v);
                }
            }
        }
        SrForm::Ar | SrForm::Iid => {
            let proc_ = ArProcess::new(ar.phi_sr, gamma_sr)?;
            for i in 0..actors {
                ar_path(&proc_, proc_.gamma(), times, rng, sr.actor_path_mut(i));
            }
        }
    }
    Ok(ModelParameters {
        beta,
        beta_layout: layout,
        covariates,
        ar,
        innov,
        rho_gg: rho,
        sr,
    })
}

/// Convenience truth with pooled `beta` for desk-scale designs.
pub fn default_truth(actors: usize, times: usize, beta: Vec<f64>, family: Family) -> ModelParameters {
    let p = beta.len();
    ModelParameters {
        beta,
        beta_layout: BetaLayout::Pooled,
        covariates: p,
        ar: ArCoefficients {
            phi_sr: Mat2::new(0.8, 0.05, 0.1, 0.6),
            phi_g: 0.67,
            phi_gg: 0.1,
        },
        innov: InnovationCov {
            gamma_sr: Mat2::new(1.0, 0.5, 0.5, 1.0),
            gamma_g2: 1.0,
            lambda_gg: 0.32,
        },
        rho_gg: (family == Family::Binary).then_some(0.68),
        sr: SrEffects::zeros(actors, times),
    }
}

pub fn covariate_names(p: usize) -> Vec<String> {
    (0..p)
        .map(|k| if k == 0 { "intercept".to_string() } else { format!("x{k}") })
        .collect()
}
