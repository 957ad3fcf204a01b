//! Prior hyperparameters and log-prior evaluation.
//!
//! The normal priors on `Phi_sr`, `(phi_g, phi_gg)` and `rho_gg` are
//! restricted by indicator functions (stationarity, positive definiteness,
//! `|rho_gg| < 1`). Their truncation constants are omitted everywhere: they
//! do not depend on the parameters, so they cancel in every MH ratio.
//!
//! The Gaussian-family `Gamma_gg` prior is placed on the sum/difference
//! variances `(sigma_a^2, sigma_b^2)`, and densities are reported in those
//! coordinates.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{probit_innovation_from, wong_inverse, Family, ModelParameters};
use crate::numerics::{
    mvn_logpdf, normal_logpdf, spectral_radius, InverseGamma, InverseWishart, Mat2, SpdMatrix,
};

/// Hyperparameters of the semi-conjugate priors.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub family: Family,
    pub beta_mean: Vec<f64>,
    pub beta_cov: SpdMatrix,
    /// Row-major `(phi_s, phi_sr, phi_rs, phi_r)`.
    pub phi_sr_mean: [f64; 4],
    pub phi_sr_cov: SpdMatrix,
    /// `(phi_g, phi_gg)`.
    pub phi_gg_mean: [f64; 2],
    pub phi_gg_cov: SpdMatrix,
    pub v_sr: f64,
    pub s_sr: SpdMatrix,
    pub alpha_a: f64,
    pub delta_a: f64,
    pub alpha_b: f64,
    pub delta_b: f64,
    pub rho_mean: f64,
    pub rho_var: f64,
}

/// Scalar hyperparameters from which an isotropic [`PriorSpec`] is built once
/// the length of the stacked `beta` is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorHyper {
    pub beta_mean: f64,
    pub beta_var: f64,
    pub phi_mean: f64,
    pub phi_var: f64,
    pub v_sr: f64,
    /// `S_sr = s_sr_scale * I`.
    pub s_sr_scale: f64,
    pub alpha_a: f64,
    pub delta_a: f64,
    pub alpha_b: f64,
    pub delta_b: f64,
    pub rho_mean: f64,
    pub rho_var: f64,
}

impl Default for PriorHyper {
    fn default() -> Self {
        Self {
            beta_mean: 0.0,
            beta_var: 100.0,
            phi_mean: 0.0,
            phi_var: 100.0,
            v_sr: 4.0,
            s_sr_scale: 1.0,
            alpha_a: 1.0,
            delta_a: 1.0,
            alpha_b: 1.0,
            delta_b: 1.0,
            rho_mean: 0.0,
            rho_var: 100.0,
        }
    }
}

impl PriorHyper {
    pub fn build(&self, family: Family, n_beta: usize) -> Result<PriorSpec> {
        for v in [
            self.beta_var,
            self.phi_var,
            self.s_sr_scale,
            self.alpha_a,
            self.delta_a,
            self.alpha_b,
            self.delta_b,
            self.rho_var,
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonpositiveHyperparameter(v));
            }
        }
        if !(self.v_sr > 1.0) {
            return Err(Error::InvalidDegreesOfFreedom {
                df: self.v_sr,
                dim: 2,
            });
        }
        let iso = |d: usize, v: f64| SpdMatrix::new(DMatrix::identity(d, d) * v);
        Ok(PriorSpec {
            family,
            beta_mean: vec![self.beta_mean; n_beta],
            beta_cov: iso(n_beta, self.beta_var)?,
            phi_sr_mean: [self.phi_mean; 4],
            phi_sr_cov: iso(4, self.phi_var)?,
            phi_gg_mean: [self.phi_mean; 2],
            phi_gg_cov: iso(2, self.phi_var)?,
            v_sr: self.v_sr,
            s_sr: iso(2, self.s_sr_scale)?,
            alpha_a: self.alpha_a,
            delta_a: self.delta_a,
            alpha_b: self.alpha_b,
            delta_b: self.delta_b,
            rho_mean: self.rho_mean,
            rho_var: self.rho_var,
        })
    }
}

/// `beta ~ mvn(0, 100 I)`, `Phi ~ mvn(0, 100 I)` restricted to stationarity,
/// `Gamma_sr ~ inverse-Wishart(4, I)`, `sigma_a^2, sigma_b^2 ~ inverse-gamma(1, 1)`
/// and, for the binary family, `rho_gg ~ normal(0, 100)` on `|rho_gg| < 1`.
pub fn default_diffuse(family: Family, n_beta: usize) -> PriorSpec {
    PriorHyper::default()
        .build(family, n_beta)
        .expect("default hyperparameters are valid")
}

impl PriorSpec {
    pub fn log_prior_beta(&self, beta: &[f64]) -> f64 {
        mvn_logpdf(beta, &self.beta_mean, &self.beta_cov).unwrap_or(f64::NEG_INFINITY)
    }

    /// Restricted to spectral radius below one.
    pub fn log_prior_phi_sr(&self, phi: &Mat2) -> f64 {
        if !(spectral_radius(phi) < 1.0) {
            return f64::NEG_INFINITY;
        }
        let v = [phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]];
        mvn_logpdf(&v, &self.phi_sr_mean, &self.phi_sr_cov).unwrap_or(f64::NEG_INFINITY)
    }

    /// Restricted to `|phi_g| + |phi_gg| < 1`, the spectral radius of the
    /// exchangeable matrix.
    pub fn log_prior_phi_gg(&self, phi_g: f64, phi_gg: f64) -> f64 {
        if !(phi_g.abs() + phi_gg.abs() < 1.0) {
            return f64::NEG_INFINITY;
        }
        mvn_logpdf(&[phi_g, phi_gg], &self.phi_gg_mean, &self.phi_gg_cov)
            .unwrap_or(f64::NEG_INFINITY)
    }

    pub fn log_prior_gamma_sr(&self, gamma: &Mat2) -> f64 {
        let Ok(x) = SpdMatrix::from_mat2(gamma) else {
            return f64::NEG_INFINITY;
        };
        match InverseWishart::new(self.v_sr, self.s_sr.clone()) {
            Ok(iw) => iw.logpdf(&x),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Density of `(sigma_a^2, sigma_b^2)`.
    pub fn log_prior_wong(&self, sigma_a2: f64, sigma_b2: f64) -> f64 {
        if !(sigma_a2 > 0.0 && sigma_b2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        let a = InverseGamma::new(self.alpha_a, self.delta_a);
        let b = InverseGamma::new(self.alpha_b, self.delta_b);
        match (a, b) {
            (Ok(a), Ok(b)) => a.logpdf(sigma_a2) + b.logpdf(sigma_b2),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Density of a single innovation variance `gamma_g^2` when the
    /// reciprocal component is switched off; reuses `(alpha_a, delta_a)`.
    pub fn log_prior_gamma_g2(&self, gamma_g2: f64) -> f64 {
        if !(gamma_g2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        InverseGamma::new(self.alpha_a, self.delta_a)
            .map(|d| d.logpdf(gamma_g2))
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Restricted to `|rho| < 1`.
    pub fn log_prior_rho(&self, rho: f64) -> f64 {
        if !(rho.abs() < 1.0) {
            return f64::NEG_INFINITY;
        }
        normal_logpdf(rho, self.rho_mean, self.rho_var)
    }
}

/// Sum of component log priors for the full model, or `-inf` outside the
/// constraint region. Random effects are not included.
pub fn log_prior(theta: &ModelParameters, spec: &PriorSpec) -> f64 {
    let ar = &theta.ar;
    let mut lp = spec.log_prior_beta(&theta.beta)
        + spec.log_prior_phi_sr(&ar.phi_sr)
        + spec.log_prior_phi_gg(ar.phi_g, ar.phi_gg)
        + spec.log_prior_gamma_sr(&theta.innov.gamma_sr);
    match spec.family {
        Family::Gaussian => {
            lp += match wong_inverse(theta.innov.gamma_g2, theta.innov.lambda_gg) {
                Ok((a, b)) => spec.log_prior_wong(a, b),
                Err(_) => f64::NEG_INFINITY,
            };
        }
        Family::Binary => {
            let Some(rho) = theta.rho_gg else {
                return f64::NEG_INFINITY;
            };
            if !probit_innovation_from(ar.phi_g, ar.phi_gg, rho).positive_definite {
                return f64::NEG_INFINITY;
            }
            lp += spec.log_prior_rho(rho);
        }
    }
    if lp.is_nan() {
        f64::NEG_INFINITY
    } else {
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArCoefficients, BetaLayout, InnovationCov, SrEffects};

    fn params(family: Family) -> ModelParameters {
        ModelParameters {
            beta: vec![0.0; 3],
            beta_layout: BetaLayout::Pooled,
            covariates: 3,
            ar: ArCoefficients::zero(),
            innov: InnovationCov {
                gamma_sr: Mat2::identity(),
                gamma_g2: 1.0,
                lambda_gg: 0.0,
            },
            rho_gg: (family == Family::Binary).then_some(0.0),
            sr: SrEffects::zeros(2, 2),
        }
    }

    #[test]
    fn diffuse_values() {
        let g = default_diffuse(Family::Gaussian, 3);
        assert_eq!(g.v_sr, 4.0);
        assert_eq!(g.s_sr.to_mat2(), Mat2::identity());
        assert_eq!((g.alpha_a, g.delta_a, g.alpha_b, g.delta_b), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(g.beta_cov.matrix()[(2, 2)], 100.0);
        let b = default_diffuse(Family::Binary, 3);
        assert_eq!(b.rho_var, 100.0);
    }

    #[test]
    fn constraint_indicators() {
        let spec = default_diffuse(Family::Gaussian, 3);
        let mut p = params(Family::Gaussian);
        assert!(log_prior(&p, &spec).is_finite());
        p.ar.phi_sr = Mat2::new(1.1, 0.0, 0.0, 0.2);
        assert_eq!(log_prior(&p, &spec), f64::NEG_INFINITY);
        let mut p = params(Family::Gaussian);
        p.ar.phi_g = 0.6;
        p.ar.phi_gg = 0.5;
        assert_eq!(log_prior(&p, &spec), f64::NEG_INFINITY);
        let spec = default_diffuse(Family::Binary, 3);
        let mut p = params(Family::Binary);
        p.rho_gg = Some(1.2);
        assert_eq!(log_prior(&p, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn sum_of_components_at_prior_means() {
        let spec = default_diffuse(Family::Gaussian, 3);
        let p = params(Family::Gaussian);
        let (a, b) = wong_inverse(1.0, 0.0).unwrap();
        let mut comps = [
            mvn_logpdf(&[0.0; 3], &[0.0; 3], &spec.beta_cov).unwrap(),
            mvn_logpdf(&[0.0; 4], &[0.0; 4], &spec.phi_sr_cov).unwrap(),
            mvn_logpdf(&[0.0; 2], &[0.0; 2], &spec.phi_gg_cov).unwrap(),
            InverseWishart::new(4.0, SpdMatrix::identity(2))
                .unwrap()
                .logpdf(&SpdMatrix::identity(2)),
            InverseGamma::new(1.0, 1.0).unwrap().logpdf(a),
            InverseGamma::new(1.0, 1.0).unwrap().logpdf(b),
        ];
        let fwd: f64 = comps.iter().sum();
        comps.reverse();
        let rev: f64 = comps.iter().sum();
        let lp = log_prior(&p, &spec);
        assert!((lp - fwd).abs() < 1e-12);
        assert!((lp - rev).abs() < 1e-12);
    }

    #[test]
    fn probit_requires_pd_innovation() {
        let spec = default_diffuse(Family::Binary, 3);
        let mut p = params(Family::Binary);
        // with stationary coefficients and |rho| < 1 the implied innovation
        // is always PD, so the indicator only bites outside stationarity
        p.ar.phi_g = 0.9;
        p.ar.phi_gg = 0.5;
        p.rho_gg = Some(0.9);
        assert!(!probit_innovation_from(0.9, 0.5, 0.9).positive_definite);
        assert_eq!(log_prior(&p, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn bad_hyper_rejected() {
        let h = PriorHyper {
            alpha_a: 0.0,
            ..PriorHyper::default()
        };
        assert_eq!(h.build(Family::Gaussian, 1), Err(Error::NonpositiveHyperparameter(0.0)));
    }
}
