//! Linear algebra and sampling primitives shared by every other module.
//!
//! All samplers take an explicit RNG and are deterministic functions of
//! their inputs and the RNG state.

mod dist;
mod linalg;
mod lyapunov;
mod rng;
pub mod special;
mod truncnorm;

pub use dist::{
    mvn_logpdf, mvn_sample, normal_logpdf, standard_normal, InverseGamma, InverseWishart,
};
pub use linalg::{cholesky, spectral_radius, Mat2, Spd2, SpdMatrix, Vec2};
pub use lyapunov::solve_discrete_lyapunov;
pub use rng::RngStream;
pub use truncnorm::{truncated_normal_sample, Sign};

/// `ln(2 pi)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;
