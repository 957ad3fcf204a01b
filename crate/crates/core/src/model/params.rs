use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{spectral_radius, Mat2, Spd2, Vec2};

/// Whether regression coefficients vary by time (`beta_t`) or are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaLayout {
    PerTime,
    Pooled,
}

impl BetaLayout {
    /// Length of the stacked coefficient vector.
    pub fn len(self, times: usize, p: usize) -> usize {
        match self {
            BetaLayout::PerTime => times * p,
            BetaLayout::Pooled => p,
        }
    }

    /// Offset of `beta_t` inside the stacked vector.
    #[inline]
    pub fn offset(self, t: usize, p: usize) -> usize {
        match self {
            BetaLayout::PerTime => t * p,
            BetaLayout::Pooled => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BetaLayout::PerTime => "per_time",
            BetaLayout::Pooled => "pooled",
        }
    }
}

impl core::str::FromStr for BetaLayout {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per_time" | "per-time" | "pertime" => Ok(BetaLayout::PerTime),
            "pooled" => Ok(BetaLayout::Pooled),
            other => Err(crate::error::Error::ConfigInvalid(alloc::format!("unknown beta layout {other:?}"))),
        }
    }
}

/// AR(1) coefficient matrices. `phi_sr` is unrestricted; the dyadic matrix is
/// exchangeable, `[[phi_g, phi_gg], [phi_gg, phi_g]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArCoefficients {
    pub phi_sr: Mat2,
    pub phi_g: f64,
    pub phi_gg: f64,
}

impl ArCoefficients {
    pub fn zero() -> Self {
        Self {
            phi_sr: Mat2::zeros(),
            phi_g: 0.0,
            phi_gg: 0.0,
        }
    }

    pub fn phi_gg_matrix(&self) -> Mat2 {
        exchangeable(self.phi_g, self.phi_gg)
    }

    /// `(phi_s, phi_sr, phi_rs, phi_r)`, row-major.
    pub fn phi_sr_vec(&self) -> [f64; 4] {
        let m = &self.phi_sr;
        [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
    }
}

/// Innovation covariances: `gamma_sr` unrestricted SPD, and the exchangeable
/// `gamma_gg = gamma_g2 * [[1, lambda_gg], [lambda_gg, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationCov {
    pub gamma_sr: Mat2,
    pub gamma_g2: f64,
    pub lambda_gg: f64,
}

impl InnovationCov {
    pub fn identity() -> Self {
        Self {
            gamma_sr: Mat2::identity(),
            gamma_g2: 1.0,
            lambda_gg: 0.0,
        }
    }

    pub fn gamma_gg(&self) -> Mat2 {
        exchangeable(self.gamma_g2, self.lambda_gg * self.gamma_g2)
    }

    /// `gamma_gg` is positive definite iff `gamma_g2 > 0` and `|lambda_gg| < 1`.
    pub fn gamma_gg_is_pd(&self) -> bool {
        self.gamma_g2 > 0.0 && self.lambda_gg.abs() < 1.0
    }

    pub fn gamma_sr_is_pd(&self) -> bool {
        Spd2::new(self.gamma_sr).is_ok()
    }
}

pub(crate) fn exchangeable(diag: f64, off: f64) -> Mat2 {
    Mat2::new(diag, off, off, diag)
}

/// Sender/receiver effects indexed by `(actor, time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrEffects {
    actors: usize,
    times: usize,
    values: Vec<f64>,
}

impl SrEffects {
    pub fn zeros(actors: usize, times: usize) -> Self {
        Self {
            actors,
            times,
            values: vec![0.0; actors * times * 2],
        }
    }

    /// From `(s, r)` values laid out as `[(i * T + t) * 2 + role]`.
    pub fn from_values(actors: usize, times: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), actors * times * 2);
        Self {
            actors,
            times,
            values,
        }
    }

    pub fn actors(&self) -> usize {
        self.actors
    }

    pub fn times(&self) -> usize {
        self.times
    }

    #[inline]
    pub fn sender(&self, i: usize, t: usize) -> f64 {
        self.values[(i * self.times + t) * 2]
    }

    #[inline]
    pub fn receiver(&self, i: usize, t: usize) -> f64 {
        self.values[(i * self.times + t) * 2 + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> Vec2 {
        let k = (i * self.times + t) * 2;
        Vec2::new(self.values[k], self.values[k + 1])
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, v: Vec2) {
        let k = (i * self.times + t) * 2;
        self.values[k] = v[0];
        self.values[k + 1] = v[1];
    }

    /// The path `(s_{i,1}, r_{i,1}, ..., s_{i,T}, r_{i,T})`.
    pub fn actor_path(&self, i: usize) -> &[f64] {
        &self.values[i * self.times * 2..(i + 1) * self.times * 2]
    }

    pub fn actor_path_mut(&mut self, i: usize) -> &mut [f64] {
        let t = self.times;
        &mut self.values[i * t * 2..(i + 1) * t * 2]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The full parameter set of the model.
///
/// `rho_gg` is `Some` for the probit family, where it parameterizes the
/// residual correlation and `innov.gamma_g2`, `innov.lambda_gg` are derived
/// from `(phi_g, phi_gg, rho_gg)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub beta: Vec<f64>,
    pub beta_layout: BetaLayout,
    pub covariates: usize,
    pub ar: ArCoefficients,
    pub innov: InnovationCov,
    pub rho_gg: Option<f64>,
    pub sr: SrEffects,
}

impl ModelParameters {
    pub fn beta_t(&self, t: usize) -> &[f64] {
        let o = self.beta_layout.offset(t, self.covariates);
        &self.beta[o..o + self.covariates]
    }

    pub fn times(&self) -> usize {
        self.sr.times()
    }

    pub fn actors(&self) -> usize {
        self.sr.actors()
    }

    /// Stationarity of both AR matrices and positive definiteness of both
    /// innovation covariances.
    pub fn in_support(&self) -> bool {
        spectral_radius(&self.ar.phi_sr) < 1.0
            && spectral_radius(&self.ar.phi_gg_matrix()) < 1.0
            && self.innov.gamma_sr_is_pd()
            && self.innov.gamma_gg_is_pd()
            && self.rho_gg.map_or(true, |r| r.abs() < 1.0)
    }
}
