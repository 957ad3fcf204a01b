use core::fmt;
use core::str::FromStr;

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::model::BetaLayout;

/// How the sender/receiver effects evolve over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrForm {
    /// Bivariate stationary AR(1) per actor.
    Ar,
    /// One draw per actor held constant over time, `sr_i ~ mvn(0, Gamma_sr)`.
    Static,
    /// Independent over time, i.e. AR(1) with `Phi_sr` fixed at zero.
    Iid,
    /// No sender/receiver effects.
    Absent,
}

impl SrForm {
    pub fn as_str(self) -> &'static str {
        match self {
            SrForm::Ar => "ar",
            SrForm::Static => "static",
            SrForm::Iid => "iid",
            SrForm::Absent => "absent",
        }
    }
}

impl FromStr for SrForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ar" => Ok(SrForm::Ar),
            "static" => Ok(SrForm::Static),
            "iid" => Ok(SrForm::Iid),
            "absent" => Ok(SrForm::Absent),
            other => Err(Error::ConfigInvalid(format!("unknown sender/receiver form {other:?}"))),
        }
    }
}

/// Which parts of the covariance model are estimated. Restricted
/// coefficients are held at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Structure {
    pub sr: SrForm,
    /// Estimate `Phi_gg`; otherwise the residuals are independent over time.
    pub gg_temporal: bool,
    /// Estimate the within-dyad terms `phi_gg` and `lambda_gg` (or `rho_gg`).
    pub gg_reciprocal: bool,
}

impl Structure {
    pub const FULL: Structure = Structure {
        sr: SrForm::Ar,
        gg_temporal: true,
        gg_reciprocal: true,
    };
}

impl Default for Structure {
    fn default() -> Self {
        Self::FULL
    }
}

/// The full model and its restrictions used for holdout comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submodel {
    /// Covariates and the full longitudinal covariance.
    M1,
    /// Intercept-only mean with the full longitudinal covariance.
    M2,
    /// Covariates with time-constant sender/receiver effects and reciprocal residuals.
    M3,
    /// As `M3` with effects independent across time.
    M3Iid,
    /// Covariates with a scalar AR(1) per directed series.
    M4,
    /// Covariates with independent noise.
    M5,
}

impl Submodel {
    pub const ALL: [Submodel; 6] = [
        Submodel::M1,
        Submodel::M2,
        Submodel::M3,
        Submodel::M3Iid,
        Submodel::M4,
        Submodel::M5,
    ];

    pub fn structure(self) -> Structure {
        match self {
            Submodel::M1 | Submodel::M2 => Structure::FULL,
            Submodel::M3 => Structure {
                sr: SrForm::Static,
                gg_temporal: false,
                gg_reciprocal: true,
            },
            Submodel::M3Iid => Structure {
                sr: SrForm::Iid,
                gg_temporal: false,
                gg_reciprocal: true,
            },
            Submodel::M4 => Structure {
                sr: SrForm::Absent,
                gg_temporal: true,
                gg_reciprocal: false,
            },
            Submodel::M5 => Structure {
                sr: SrForm::Absent,
                gg_temporal: false,
                gg_reciprocal: false,
            },
        }
    }

    pub fn intercept_only(self) -> bool {
        self == Submodel::M2
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Submodel::M1 => "M1",
            Submodel::M2 => "M2",
            Submodel::M3 => "M3",
            Submodel::M3Iid => "M3-iid",
            Submodel::M4 => "M4",
            Submodel::M5 => "M5",
        }
    }
}

impl fmt::Display for Submodel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Submodel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Submodel::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown model {s:?}")))
    }
}

/// Run-length and proposal settings for a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub total_scans: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Probability of using the semi-conjugate proposal in the MH steps;
    /// otherwise a symmetric random walk is used.
    pub gibbs_vs_randomwalk_probability: f64,
    /// Standard deviation of the additive walk on AR coefficients.
    pub rw_step_phi: f64,
    /// Standard deviation of the walk on log variances and correlations.
    pub rw_step_gamma: f64,
    /// Half-width of the uniform walk on `rho_gg` (binary family).
    pub rho_halfwidth: f64,
    pub seed: u64,
    pub structure: Structure,
    pub beta_layout: BetaLayout,
    /// Keep the latent `theta` in every saved draw (binary family).
    pub store_latent: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            total_scans: 5000,
            burn_in: 1000,
            thin: 1,
            gibbs_vs_randomwalk_probability: 0.5,
            rw_step_phi: 0.05,
            rw_step_gamma: 0.1,
            rho_halfwidth: 0.1,
            seed: 1,
            structure: Structure::FULL,
            beta_layout: BetaLayout::PerTime,
            store_latent: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.burn_in > self.total_scans {
            return bad(format!(
                "burn_in {} exceeds total_scans {}",
                self.burn_in, self.total_scans
            ));
        }
        if self.thin == 0 {
            return bad("thin must be at least 1".into());
        }
        let p = self.gibbs_vs_randomwalk_probability;
        if !(0.0..=1.0).contains(&p) {
            return bad(format!("gibbs_vs_randomwalk_probability {p} not in [0, 1]"));
        }
        for (name, v) in [
            ("rw_step_phi", self.rw_step_phi),
            ("rw_step_gamma", self.rw_step_gamma),
            ("rho_halfwidth", self.rho_halfwidth),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn kept_draws(&self) -> usize {
        (self.total_scans - self.burn_in) / self.thin
    }
}
