use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::params::{exchangeable, ArCoefficients};
use crate::error::{Error, Result};
use crate::numerics::{solve_discrete_lyapunov, spectral_radius, special, Mat2, Spd2, Vec2};

/// Per-matrix stationarity of the AR coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationarityCheck {
    pub sr: bool,
    pub gg: bool,
}

/// True iff every eigenvalue of each `Phi` has modulus below one.
pub fn check_stationary(ar: &ArCoefficients) -> StationarityCheck {
    StationarityCheck {
        sr: spectral_radius(&ar.phi_sr) < 1.0,
        gg: spectral_radius(&ar.phi_gg_matrix()) < 1.0,
    }
}

/// Lag-covariance blocks of a stationary bivariate AR(1) and their
/// `2T x 2T` block-Toeplitz assembly. Block `(u, v)` is `Sigma(v - u)` for
/// `v >= u` and `Sigma(u - v)'` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryCovariance {
    pub lags: Vec<Mat2>,
    pub assembled: DMatrix<f64>,
}

impl StationaryCovariance {
    pub fn times(&self) -> usize {
        self.lags.len()
    }

    pub fn lag(&self, d: usize) -> Result<Mat2> {
        self.lags.get(d).copied().ok_or(Error::LagOutOfRange {
            lag: d,
            times: self.lags.len(),
        })
    }
}

/// `Sigma(d) = Sigma(0) (Phi')^d` with `Sigma(0) = Phi Sigma(0) Phi' + Gamma`.
pub fn stationary_blocks(phi: &Mat2, gamma: &Mat2, times: usize) -> Result<StationaryCovariance> {
    let sigma0 = solve_discrete_lyapunov(phi, gamma)?;
    let phi_t = phi.transpose();
    let lags: Vec<Mat2> = (0..times).map(|d| sigma0 * mat_pow(&phi_t, d)).collect();
    let n = 2 * times;
    let mut assembled = DMatrix::zeros(n, n);
    for u in 0..times {
        for v in 0..times {
            let block = if v >= u {
                lags[v - u]
            } else {
                lags[u - v].transpose()
            };
            for a in 0..2 {
                for b in 0..2 {
                    assembled[(2 * u + a, 2 * v + b)] = block[(a, b)];
                }
            }
        }
    }
    Ok(StationaryCovariance { lags, assembled })
}

fn mat_pow(m: &Mat2, mut e: usize) -> Mat2 {
    let mut base = *m;
    let mut acc = Mat2::identity();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// Block-tridiagonal precision of a stacked stationary AR(1) path.
/// `upper[t]` is block `(t, t + 1)`; block `(t + 1, t)` is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionBlocks {
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
}

impl PrecisionBlocks {
    pub fn times(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let t = self.diag.len();
        let mut m = DMatrix::zeros(2 * t, 2 * t);
        let mut put = |u: usize, v: usize, b: &Mat2| {
            for a in 0..2 {
                for c in 0..2 {
                    m[(2 * u + a, 2 * v + c)] = b[(a, c)];
                }
            }
        };
        for (u, b) in self.diag.iter().enumerate() {
            put(u, u, b);
        }
        for (u, b) in self.upper.iter().enumerate() {
            put(u, u + 1, b);
            put(u + 1, u, &b.transpose());
        }
        m
    }

    /// `Q x` for a stacked path `x` of length `2T`.
    pub fn mul_path(&self, x: &[f64], out: &mut [f64]) {
        let t = self.diag.len();
        for u in 0..t {
            let mut acc = self.diag[u] * Vec2::new(x[2 * u], x[2 * u + 1]);
            if u + 1 < t {
                acc += self.upper[u] * Vec2::new(x[2 * u + 2], x[2 * u + 3]);
            }
            if u > 0 {
                acc += self.upper[u - 1].transpose() * Vec2::new(x[2 * u - 2], x[2 * u - 1]);
            }
            out[2 * u] = acc[0];
            out[2 * u + 1] = acc[1];
        }
    }
}

/// A stationary bivariate AR(1) process `x_t = Phi x_{t-1} + e_t`,
/// `e_t ~ mvn(0, Gamma)`, started from its stationary law `mvn(0, Sigma(0))`.
///
/// Path densities use the Markov factorization (initial block times
/// transition densities), which equals the dense block-Toeplitz density.
#[derive(Debug, Clone, PartialEq)]
pub struct ArProcess {
    phi: Mat2,
    gamma: Spd2,
    sigma0: Spd2,
}

impl ArProcess {
    pub fn new(phi: Mat2, gamma: Mat2) -> Result<Self> {
        let gamma = Spd2::new(gamma)?;
        let sigma0 = Spd2::new(solve_discrete_lyapunov(&phi, &gamma.matrix())?)?;
        Ok(Self { phi, gamma, sigma0 })
    }

    pub fn phi(&self) -> Mat2 {
        self.phi
    }

    pub fn gamma(&self) -> &Spd2 {
        &self.gamma
    }

    pub fn sigma0(&self) -> &Spd2 {
        &self.sigma0
    }

    /// Log density of a stacked path `(x_1', ..., x_T')'`.
    pub fn log_density(&self, path: &[f64]) -> f64 {
        let t = path.len() / 2;
        if t == 0 {
            return 0.0;
        }
        let mut prev = Vec2::new(path[0], path[1]);
        let mut acc = self.sigma0.logpdf(prev);
        for u in 1..t {
            let cur = Vec2::new(path[2 * u], path[2 * u + 1]);
            acc += self.gamma.logpdf(cur - self.phi * prev);
            prev = cur;
        }
        acc
    }

    pub fn precision_blocks(&self, times: usize) -> PrecisionBlocks {
        let g_inv = self.gamma.inverse();
        if times == 1 {
            return PrecisionBlocks {
                diag: alloc::vec![self.sigma0.inverse()],
                upper: Vec::new(),
            };
        }
        let pgp = self.phi.transpose() * g_inv * self.phi;
        let mut diag = Vec::with_capacity(times);
        diag.push(self.sigma0.inverse() + pgp);
        for _ in 1..times - 1 {
            diag.push(g_inv + pgp);
        }
        diag.push(g_inv);
        let up = -(self.phi.transpose() * g_inv);
        PrecisionBlocks {
            diag,
            upper: alloc::vec![up; times - 1],
        }
    }
}

/// Innovation parameters implied by a unit-variance residual process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbitInnovation {
    pub gamma_g2: f64,
    pub gamma_gg: f64,
    pub positive_definite: bool,
}

impl ProbitInnovation {
    pub fn lambda_gg(&self) -> f64 {
        self.gamma_gg / self.gamma_g2
    }

    pub fn matrix(&self) -> Mat2 {
        exchangeable(self.gamma_g2, self.gamma_gg)
    }
}

/// Solves `[[1, rho], [rho, 1]] = Phi R Phi + Gamma` for the exchangeable
/// innovation covariance `Gamma = [[g2, ggg], [ggg, g2]]`.
pub fn probit_innovation_from(phi_g: f64, phi_gg: f64, rho_gg: f64) -> ProbitInnovation {
    let gamma_g2 = 1.0 - phi_g * phi_g - phi_gg * phi_gg - 2.0 * rho_gg * phi_g * phi_gg;
    let gamma_gg =
        rho_gg - 2.0 * phi_g * phi_gg - rho_gg * phi_g * phi_g - rho_gg * phi_gg * phi_gg;
    ProbitInnovation {
        gamma_g2,
        gamma_gg,
        positive_definite: gamma_g2 > 0.0 && gamma_gg.abs() < gamma_g2,
    }
}

/// `(sigma_a^2, sigma_b^2) -> (gamma_g^2, lambda_gg)` for the sum/difference
/// rotation `a = g_ij + g_ji`, `b = g_ij - g_ji`.
pub fn wong_transform(sigma_a2: f64, sigma_b2: f64) -> Result<(f64, f64)> {
    for v in [sigma_a2, sigma_b2] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonpositiveVariance(v));
        }
    }
    let total = sigma_a2 + sigma_b2;
    Ok((total / 4.0, (sigma_a2 - sigma_b2) / total))
}

/// Inverse of [`wong_transform`].
pub fn wong_inverse(gamma_g2: f64, lambda_gg: f64) -> Result<(f64, f64)> {
    if !(gamma_g2 > 0.0) || !gamma_g2.is_finite() {
        return Err(Error::NonpositiveVariance(gamma_g2));
    }
    if !(lambda_gg.abs() < 1.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok((
        2.0 * gamma_g2 * (1.0 + lambda_gg),
        2.0 * gamma_g2 * (1.0 - lambda_gg),
    ))
}

/// Covariances between directed relations at time lag `d` under the
/// stationary model, named by the relation pattern they describe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCovariances {
    pub lag: usize,
    /// `Cov(s_t, s_{t+d})`
    pub sigma_s: f64,
    /// `Cov(r_t, r_{t+d})`
    pub sigma_r: f64,
    /// `Cov(s_t, r_{t+d})`
    pub sigma_sr: f64,
    /// `Cov(r_t, s_{t+d})`
    pub sigma_rs: f64,
    /// `Cov(g_ij,t, g_ij,t+d)`
    pub sigma_g: f64,
    /// `Cov(g_ij,t, g_ji,t+d)`
    pub sigma_gg: f64,
    /// `sigma_sr / sqrt(sigma_s sigma_r)`; a correlation at `d = 0`.
    pub rho_sr: f64,
    /// `sigma_gg / sigma_g`; a correlation at `d = 0`.
    pub rho_gg: f64,
}

impl DerivedCovariances {
    /// `Cov(y_ij,t, y_ik,t+d)`: shared sender.
    pub fn same_sender(&self) -> f64 {
        self.sigma_s
    }

    /// `Cov(y_ij,t, y_kj,t+d)`: shared receiver.
    pub fn same_receiver(&self) -> f64 {
        self.sigma_r
    }

    /// `Cov(y_ij,t, y_jk,t+d)`: receiver at `t` sends at `t + d`.
    pub fn receiver_then_sender(&self) -> f64 {
        self.sigma_rs
    }

    /// `Cov(y_ij,t+d, y_jk,t)`: sender at `t` receives at `t + d`.
    pub fn sender_then_receiver(&self) -> f64 {
        self.sigma_sr
    }

    /// `Cov(y_ij,t, y_ij,t+d)`: the same directed relation.
    pub fn same_relation(&self) -> f64 {
        self.sigma_s + self.sigma_r + self.sigma_g
    }

    /// `Cov(y_ij,t, y_ji,t+d)`: the reversed relation (reciprocity).
    pub fn reciprocal(&self) -> f64 {
        self.sigma_gg + self.sigma_sr + self.sigma_rs
    }
}

pub fn derived_covariances(
    sigma_sr: &StationaryCovariance,
    sigma_gg: &StationaryCovariance,
    d: usize,
) -> Result<DerivedCovariances> {
    let sr = sigma_sr.lag(d)?;
    let gg = sigma_gg.lag(d)?;
    let sigma_s = sr[(0, 0)];
    let sigma_r = sr[(1, 1)];
    let sigma_g = gg[(0, 0)];
    let s0 = sigma_sr.lag(0)?;
    let g0 = sigma_gg.lag(0)?;
    Ok(DerivedCovariances {
        lag: d,
        sigma_s,
        sigma_r,
        sigma_sr: sr[(0, 1)],
        sigma_rs: sr[(1, 0)],
        sigma_g,
        sigma_gg: gg[(0, 1)],
        rho_sr: sr[(0, 1)] / libm::sqrt(s0[(0, 0)] * s0[(1, 1)]),
        rho_gg: gg[(0, 1)] / g0[(0, 0)],
    })
}

/// First-order approximation `Cov(y1, y2) ~ Cov(theta1, theta2) h'(eta1) h'(eta2)`
/// for a GLM with inverse link `h`. Diagnostic only.
pub fn glm_covariance_approximation<H: Fn(f64) -> f64>(
    cov_theta: f64,
    eta1: f64,
    eta2: f64,
    link_derivative: H,
) -> f64 {
    cov_theta * link_derivative(eta1) * link_derivative(eta2)
}

/// Derivative of the probit inverse link, the standard normal density.
pub fn probit_link_derivative(eta: f64) -> f64 {
    special::norm_pdf(eta)
}
