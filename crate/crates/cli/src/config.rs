//! Run configurations, simulation designs and truth sidecars, all in the flat
//! `key = value` format of [`crate::kv`].
//!
//! Parameter keys are shared by designs and sidecars: `beta`, `beta_layout`,
//! `phi_s`, `phi_sr`, `phi_rs`, `phi_r`, `phi_g`, `phi_gg`, `gamma2_s`,
//! `gamma_sr`, `gamma2_r`, `gamma2_g`, `lambda_gg`, `rho_gg`.

use std::path::{Path, PathBuf};

use lsr_core::model::{BetaLayout, DyadPanel, Family, ModelParameters, SrEffects};
use lsr_core::numerics::Mat2;
use lsr_core::prior::PriorHyper;
use lsr_core::sampler::{SamplerConfig, Submodel};
use lsr_core::simulate::{covariate_names, default_truth, CovariateGenerator, SimulationDesign};

use crate::error::{Error, Result};
use crate::kv::{KvMap, KvWriter};
use crate::panel_io;

/// On-disk chain encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFormat {
    Text,
    Binary,
}

impl std::str::FromStr for ChainFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ChainFormat::Text),
            "binary" => Ok(ChainFormat::Binary),
            other => Err(Error::ConfigInvalid(format!("unknown chain format {other:?}"))),
        }
    }
}

/// Everything a `fit` or `predict` invocation needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub submodel: Submodel,
    pub beta_layout: BetaLayout,
    pub prior: PriorHyper,
    /// Structure and layout are filled from `submodel` and `beta_layout` at fit time.
    pub sampler: SamplerConfig,
    pub holdout_fraction: f64,
    /// Models compared by `predict`.
    pub models: Vec<Submodel>,
    pub out: Option<PathBuf>,
    pub chain_format: ChainFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: Family::Gaussian,
            submodel: Submodel::M1,
            beta_layout: BetaLayout::PerTime,
            prior: PriorHyper::default(),
            sampler: SamplerConfig::default(),
            holdout_fraction: 0.25,
            models: vec![Submodel::M1, Submodel::M2, Submodel::M3, Submodel::M4, Submodel::M5],
            out: None,
            chain_format: ChainFormat::Text,
        }
    }
}

macro_rules! take_fields {
    ($kv:expr, $target:expr, $prefix:literal, [$($field:ident),*]) => {
        $( if let Some(v) = $kv.take(concat!($prefix, stringify!($field)))? { $target.$field = v; } )*
    };
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvMap::parse(text)?;
        let mut c = RunConfig::default();
        if let Some(f) = kv.take("family")? {
            c.family = f;
        }
        if let Some(m) = kv.take("model")? {
            c.submodel = m;
        }
        if let Some(l) = kv.take("beta_layout")? {
            c.beta_layout = l;
        }
        take_fields!(kv, c.prior, "prior.", [
            beta_mean, beta_var, phi_mean, phi_var, v_sr, s_sr_scale,
            alpha_a, delta_a, alpha_b, delta_b, rho_mean, rho_var
        ]);
        take_fields!(kv, c.sampler, "", [
            total_scans, burn_in, thin, gibbs_vs_randomwalk_probability,
            rw_step_phi, rw_step_gamma, rho_halfwidth, seed, store_latent
        ]);
        if let Some(h) = kv.take("holdout_fraction")? {
            c.holdout_fraction = h;
        }
        if let Some(m) = kv.take_list("models")? {
            c.models = m;
        }
        c.out = kv.take_str("out").map(PathBuf::from);
        if let Some(f) = kv.take("chain_format")? {
            c.chain_format = f;
        }
        kv.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.holdout_fraction) {
            return Err(Error::ConfigInvalid(format!(
                "holdout_fraction {} not in [0, 0.5]",
                self.holdout_fraction
            )));
        }
        if self.models.is_empty() {
            return Err(Error::ConfigInvalid("models list is empty".into()));
        }
        self.sampler.validate()?;
        Ok(())
    }

    /// The config as text that [`RunConfig::parse`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        let p = &self.prior;
        let s = &self.sampler;
        w.put("family", self.family.as_str())
            .put("model", self.submodel)
            .put("beta_layout", self.beta_layout.as_str())
            .put("prior.beta_mean", p.beta_mean)
            .put("prior.beta_var", p.beta_var)
            .put("prior.phi_mean", p.phi_mean)
            .put("prior.phi_var", p.phi_var)
            .put("prior.v_sr", p.v_sr)
            .put("prior.s_sr_scale", p.s_sr_scale)
            .put("prior.alpha_a", p.alpha_a)
            .put("prior.delta_a", p.delta_a)
            .put("prior.alpha_b", p.alpha_b)
            .put("prior.delta_b", p.delta_b)
            .put("prior.rho_mean", p.rho_mean)
            .put("prior.rho_var", p.rho_var)
            .put("total_scans", s.total_scans)
            .put("burn_in", s.burn_in)
            .put("thin", s.thin)
            .put("gibbs_vs_randomwalk_probability", s.gibbs_vs_randomwalk_probability)
            .put("rw_step_phi", s.rw_step_phi)
            .put("rw_step_gamma", s.rw_step_gamma)
            .put("rho_halfwidth", s.rho_halfwidth)
            .put("seed", s.seed)
            .put("store_latent", s.store_latent)
            .put("holdout_fraction", self.holdout_fraction)
            .put_list("models", &self.models)
            .put(
                "chain_format",
                match self.chain_format {
                    ChainFormat::Text => "text",
                    ChainFormat::Binary => "binary",
                },
            );
        if let Some(o) = &self.out {
            w.put("out", o.display());
        }
        w.finish()
    }

    /// The sampler settings for one submodel.
    pub fn sampler_for(&self, submodel: Submodel) -> SamplerConfig {
        SamplerConfig {
            structure: submodel.structure(),
            beta_layout: self.beta_layout,
            ..self.sampler.clone()
        }
    }
}

/// Reads the parameter keys over `base`. `beta` is required unless `base`
/// already has the right length.
fn take_params(kv: &mut KvMap, base: &mut ModelParameters) -> Result<()> {
    if let Some(b) = kv.take_list::<f64>("beta")? {
        base.beta = b;
    }
    if let Some(l) = kv.take("beta_layout")? {
        base.beta_layout = l;
    }
    let phi = base.ar.phi_sr;
    let g = base.innov.gamma_sr;
    let phi_s = kv.take_or("phi_s", phi[(0, 0)])?;
    let phi_sr = kv.take_or("phi_sr", phi[(0, 1)])?;
    let phi_rs = kv.take_or("phi_rs", phi[(1, 0)])?;
    let phi_r = kv.take_or("phi_r", phi[(1, 1)])?;
    base.ar.phi_sr = Mat2::new(phi_s, phi_sr, phi_rs, phi_r);
    base.ar.phi_g = kv.take_or("phi_g", base.ar.phi_g)?;
    base.ar.phi_gg = kv.take_or("phi_gg", base.ar.phi_gg)?;
    let g2s = kv.take_or("gamma2_s", g[(0, 0)])?;
    let gsr = kv.take_or("gamma_sr", g[(0, 1)])?;
    let g2r = kv.take_or("gamma2_r", g[(1, 1)])?;
    base.innov.gamma_sr = Mat2::new(g2s, gsr, gsr, g2r);
    base.innov.gamma_g2 = kv.take_or("gamma2_g", base.innov.gamma_g2)?;
    base.innov.lambda_gg = kv.take_or("lambda_gg", base.innov.lambda_gg)?;
    match kv.take_str("rho_gg").as_deref() {
        None => {}
        Some("NA") => base.rho_gg = None,
        Some(s) => {
            base.rho_gg = Some(
                s.parse()
                    .map_err(|_| Error::ConfigInvalid(format!("rho_gg {s:?} is not a number")))?,
            )
        }
    }
    Ok(())
}

fn put_params(w: &mut KvWriter, p: &ModelParameters) {
    let phi = p.ar.phi_sr;
    let g = p.innov.gamma_sr;
    w.put_list("beta", &p.beta)
        .put("beta_layout", p.beta_layout.as_str())
        .put("phi_s", phi[(0, 0)])
        .put("phi_sr", phi[(0, 1)])
        .put("phi_rs", phi[(1, 0)])
        .put("phi_r", phi[(1, 1)])
        .put("phi_g", p.ar.phi_g)
        .put("phi_gg", p.ar.phi_gg)
        .put("gamma2_s", g[(0, 0)])
        .put("gamma_sr", g[(0, 1)])
        .put("gamma2_r", g[(1, 1)])
        .put("gamma2_g", p.innov.gamma_g2)
        .put("lambda_gg", p.innov.lambda_gg);
    match p.rho_gg {
        Some(r) => w.put("rho_gg", r),
        None => w.put("rho_gg", "NA"),
    };
}

/// Truth sidecar: every parameter including the realized sender/receiver
/// paths (`sr`, actor-major, `(s, r)` per time).
pub fn write_truth(p: &ModelParameters) -> String {
    let mut w = KvWriter::new();
    w.comment("true parameters of a simulated panel")
        .put("actors", p.actors())
        .put("times", p.times())
        .put("covariates", p.covariates);
    put_params(&mut w, p);
    w.put_list("sr", p.sr.values());
    w.finish()
}

pub fn read_truth(text: &str) -> Result<ModelParameters> {
    let mut kv = KvMap::parse(text)?;
    let a: usize = kv.take_required("actors")?;
    let t: usize = kv.take_required("times")?;
    let p: usize = kv.take_required("covariates")?;
    let mut params = default_truth(a, t, vec![0.0; p], Family::Gaussian);
    take_params(&mut kv, &mut params)?;
    params.covariates = p;
    if params.beta.len() != params.beta_layout.len(t, p) {
        return Err(Error::ConfigInvalid(format!(
            "beta has {} entries, layout needs {}",
            params.beta.len(),
            params.beta_layout.len(t, p)
        )));
    }
    let sr: Vec<f64> = kv.take_list("sr")?.unwrap_or_default();
    if sr.len() != 2 * a * t {
        return Err(Error::ConfigInvalid(format!("sr has {} values, need {}", sr.len(), 2 * a * t)));
    }
    params.sr = SrEffects::from_values(a, t, sr);
    kv.finish()?;
    Ok(params)
}

/// Reads a simulation design. Relative table paths resolve against `base_dir`.
///
/// Keys: `family`, `actors`, `times`, `covariates` (names, default
/// `intercept,x1,...` matching `beta`), `covariate_source`
/// (`standard_normal`, `constant` with `covariate_values`, or `table` with
/// `covariate_table` naming a panel file whose covariate columns are used),
/// `missing_fraction`, and the parameter keys. Parameters not given take the
/// default desk-scale truth.
pub fn read_design(text: &str, base_dir: &Path) -> Result<SimulationDesign> {
    let mut kv = KvMap::parse(text)?;
    let family: Family = kv.take_or("family", Family::Gaussian)?;
    let actors: usize = kv.take_required("actors")?;
    let times: usize = kv.take_required("times")?;
    let beta: Vec<f64> = kv
        .take_list("beta")?
        .ok_or_else(|| Error::ConfigInvalid("missing required key \"beta\"".into()))?;
    let layout: BetaLayout = kv.take_or("beta_layout", BetaLayout::Pooled)?;
    let names: Vec<String> = match kv.take_list::<String>("covariates")? {
        Some(n) => n,
        None => {
            let p = if layout == BetaLayout::PerTime && times > 0 { beta.len() / times } else { beta.len() };
            covariate_names(p)
        }
    };
    let p = names.len();
    let mut truth = default_truth(actors, times, beta, family);
    truth.beta_layout = layout;
    truth.covariates = p;
    take_params(&mut kv, &mut truth)?;
    let covariates = match kv.take_str("covariate_source").as_deref().unwrap_or("standard_normal") {
        "standard_normal" => CovariateGenerator::StandardNormal,
        "constant" => CovariateGenerator::Constant(
            kv.take_list("covariate_values")?
                .ok_or_else(|| Error::ConfigInvalid("constant covariates need covariate_values".into()))?,
        ),
        "table" => {
            let rel: PathBuf = kv.take_required::<String>("covariate_table")?.into();
            let path = if rel.is_absolute() { rel } else { base_dir.join(rel) };
            let panel: DyadPanel = panel_io::read_panel_file(&path, Family::Gaussian)?;
            if panel.actors() != actors || panel.times() != times || panel.covariate_count() != p {
                return Err(Error::ConfigInvalid(format!(
                    "covariate table {} does not match {actors} actors, {times} times, {p} covariates",
                    path.display()
                )));
            }
            CovariateGenerator::Table(panel.covariate_values().to_vec())
        }
        other => return Err(Error::ConfigInvalid(format!("unknown covariate_source {other:?}"))),
    };
    let missing_fraction = kv.take_or("missing_fraction", 0.0)?;
    kv.finish()?;
    let design = SimulationDesign {
        actors,
        times,
        covariate_names: names,
        covariates,
        truth,
        family,
        missing_fraction,
    };
    design.validate()?;
    Ok(design)
}
