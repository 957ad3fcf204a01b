//! Joint-distribution ("getting it right") checks of the samplers.
//!
//! The marginal-conditional simulator draws parameters from the prior. The
//! successive-conditional simulator alternates one sampler scan with a fresh
//! draw of the data given the parameters. Both target the prior marginal of
//! the parameters, so their moments agree iff the scan leaves the posterior
//! invariant.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::Result;
use crate::model::{DyadPanel, Family, ModelParameters};
use crate::posterior::Scalar;
use crate::prior::PriorSpec;
use crate::sampler::{scan, ChainState, Model, SamplerConfig};
use crate::simulate::{response_given, sample_prior, simulate_residuals};

/// A small fixed design on which both simulators run.
#[derive(Debug, Clone)]
pub struct GewekeSetup {
    pub actors: usize,
    pub times: usize,
    pub covariate_names: Vec<String>,
    /// Covariates in the panel cell layout.
    pub covariates: Vec<f64>,
    pub family: Family,
    pub prior: PriorSpec,
    /// Structure, layout and proposal settings; run lengths are ignored.
    pub config: SamplerConfig,
    /// Cells whose response is treated as missing.
    pub missing: Vec<usize>,
}

impl GewekeSetup {
    /// An intercept-only design.
    pub fn intercept_only(actors: usize, times: usize, family: Family, prior: PriorSpec, config: SamplerConfig) -> Self {
        Self {
            actors,
            times,
            covariate_names: vec!["intercept".to_string()],
            covariates: vec![1.0; actors * actors * times],
            family,
            prior,
            config,
            missing: Vec::new(),
        }
    }

    /// Parameter scalars that are free under the setup's structure and family.
    pub fn scalars(&self) -> Result<Vec<Scalar>> {
        let mut rng = crate::numerics::RngStream::new(0, 0);
        let p = self.draw_prior(&mut rng)?;
        let st = self.config.structure;
        Ok(Scalar::parameters(&p)
            .into_iter()
            .filter(|s| match s {
                Scalar::PhiS | Scalar::PhiSr | Scalar::PhiRs | Scalar::PhiR => {
                    st.sr == crate::sampler::SrForm::Ar
                }
                Scalar::Gamma2S | Scalar::GammaSr | Scalar::Gamma2R => {
                    st.sr != crate::sampler::SrForm::Absent
                }
                Scalar::PhiG => st.gg_temporal,
                Scalar::PhiGg => st.gg_temporal && st.gg_reciprocal,
                Scalar::Gamma2G => self.family == Family::Gaussian,
                Scalar::LambdaGg => self.family == Family::Gaussian && st.gg_reciprocal,
                Scalar::RhoGg => self.family == Family::Binary && st.gg_reciprocal,
                _ => true,
            })
            .collect())
    }

    fn draw_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelParameters> {
        sample_prior(
            &self.prior,
            &self.config.structure,
            self.actors,
            self.times,
            self.config.beta_layout,
            self.covariate_names.len(),
            rng,
        )
    }

    fn labels(&self) -> Vec<String> {
        (0..self.actors).map(|k| format!("a{k}")).collect()
    }

    /// Fresh complete working response given all parameters, and the panel
    /// that observes it outside the missing cells.
    fn draw_data<R: Rng + ?Sized>(&self, params: &ModelParameters, rng: &mut R) -> Result<(DyadPanel, Vec<f64>)> {
        let n = self.actors * self.actors * self.times;
        let template = DyadPanel::new(
            self.labels(),
            self.times,
            Family::Gaussian,
            self.covariate_names.clone(),
            vec![0.0; n],
            vec![false; n],
            self.covariates.clone(),
        )?;
        let gamma = crate::sampler::gg_innovation(params, self.family);
        let g = simulate_residuals(&params.ar.phi_gg_matrix(), &gamma, self.actors, self.times, rng)?;
        let z = response_given(&template, params, &g)?;
        let mut observed: Vec<bool> = (0..n)
            .map(|c| c / self.actors % self.actors != c % self.actors)
            .collect();
        for &c in &self.missing {
            observed[c] = false;
        }
        let y = match self.family {
            Family::Gaussian => z.clone(),
            Family::Binary => z.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect(),
        };
        let panel = DyadPanel::new(
            self.labels(),
            self.times,
            self.family,
            self.covariate_names.clone(),
            y,
            observed,
            self.covariates.clone(),
        )?;
        Ok((panel, z))
    }
}

/// `n` independent prior draws of the given scalars.
pub fn marginal_conditional<R: Rng + ?Sized>(
    setup: &GewekeSetup,
    scalars: &[Scalar],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .map(|_| {
            let p = setup.draw_prior(rng)?;
            scalars.iter().map(|s| s.value(&p)).collect()
        })
        .collect()
}

/// `n` iterations of (scan, redraw data), recording the scalars after each.
pub fn successive_conditional<R: Rng + ?Sized>(
    setup: &GewekeSetup,
    scalars: &[Scalar],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let params = setup.draw_prior(rng)?;
    let (mut panel, z) = setup.draw_data(&params, rng)?;
    let mut state = ChainState { params, z };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let model = Model {
            panel: &panel,
            prior: &setup.prior,
            structure: setup.config.structure,
        };
        scan(&mut state, &model, &setup.config, rng)?;
        out.push(
            scalars
                .iter()
                .map(|s| s.value(&state.params))
                .collect::<Result<Vec<_>>>()?,
        );
        let (p, z) = setup.draw_data(&state.params, rng)?;
        panel = p;
        state.z = z;
    }
    Ok(out)
}

/// One moment comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub name: String,
    /// 1 for the mean, 2 for the raw second moment.
    pub moment: u32,
    pub marginal: f64,
    pub successive: f64,
    /// Difference in units of its standard error.
    pub z: f64,
}

fn mean_and_se_iid(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, libm::sqrt(var / n))
}

fn mean_and_se_batch(v: &[f64], batches: usize) -> (f64, f64) {
    let n = v.len();
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| v[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let (m, se) = mean_and_se_iid(&means);
    let _ = m;
    (v[..batches * size].iter().sum::<f64>() / (batches * size) as f64, se)
}

/// Compares first and second moments of each column. Standard errors are
/// iid for the marginal draws and batch means for the successive draws.
pub fn compare(
    scalars: &[Scalar],
    marginal: &[Vec<f64>],
    successive: &[Vec<f64>],
    batches: usize,
) -> Vec<MomentCheck> {
    let mut out = Vec::new();
    for (k, s) in scalars.iter().enumerate() {
        for moment in [1u32, 2] {
            let f = |row: &Vec<f64>| if moment == 1 { row[k] } else { row[k] * row[k] };
            let a: Vec<f64> = marginal.iter().map(f).collect();
            let b: Vec<f64> = successive.iter().map(f).collect();
            let (ma, sa) = mean_and_se_iid(&a);
            let (mb, sb) = mean_and_se_batch(&b, batches);
            let se = libm::sqrt(sa * sa + sb * sb);
            let z = if se > 0.0 { (ma - mb) / se } else if ma == mb { 0.0 } else { f64::INFINITY };
            out.push(MomentCheck {
                name: s.to_string(),
                moment,
                marginal: ma,
                successive: mb,
                z,
            });
        }
    }
    out
}
