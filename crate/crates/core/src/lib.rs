//! Longitudinal social relations model for directed dyadic panel data.
//!
//! A directed relation `y[i,j,t]` from sender `i` to receiver `j` at time `t`
//! is decomposed as
//!
//! ```text
//! y[i,j,t] = x[i,j,t]' beta_t + s[i,t] + r[j,t] + g[i,j,t]
//! ```
//!
//! with sender/receiver effects `(s, r)` following a bivariate stationary
//! AR(1) per actor and dyadic residuals `(g[i,j], g[j,i])` following an
//! exchangeable bivariate AR(1) per unordered pair. Binary responses are
//! handled through a probit link on a latent Gaussian `theta`.
//!
//! The crate is `no_std` (with `alloc`). IO, file formats and the command line
//! live in the companion `lsr` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod error;
pub mod geweke;
pub mod holdout;
pub mod model;
pub mod numerics;
pub mod posterior;
pub mod prior;
pub mod sampler;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    ArCoefficients, BetaLayout, DyadPanel, Family, InnovationCov, ModelParameters, SrEffects,
};
pub use numerics::{Mat2, RngStream, Vec2};
pub use posterior::PosteriorChain;
pub use prior::{default_diffuse, log_prior, PriorHyper, PriorSpec};
pub use sampler::{SamplerConfig, Submodel};
