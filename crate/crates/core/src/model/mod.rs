//! Domain types and deterministic covariance algebra.

mod covariance;
mod linpred;
mod panel;
mod params;

pub use covariance::{
    check_stationary, derived_covariances, glm_covariance_approximation, probit_innovation_from,
    probit_link_derivative, stationary_blocks, wong_inverse, wong_transform, ArProcess,
    DerivedCovariances, PrecisionBlocks, ProbitInnovation, StationarityCheck,
    StationaryCovariance,
};
pub use linpred::{linear_predictor, pair_vector};
pub use panel::{DyadPanel, Family};
pub(crate) use params::exchangeable;
pub use params::{ArCoefficients, BetaLayout, InnovationCov, ModelParameters, SrEffects};
