use nalgebra::{Matrix4, Vector4};

use super::linalg::{spectral_radius, Mat2};
use crate::error::{Error, Result};

/// Stationary covariance `S` of `x_t = phi x_{t-1} + e_t`, `e_t ~ (0, gamma)`,
/// i.e. the solution of `S = phi S phi' + gamma`.
///
/// Solved exactly through `(I - phi (x) phi) vec(S) = vec(gamma)`.
pub fn solve_discrete_lyapunov(phi: &Mat2, gamma: &Mat2) -> Result<Mat2> {
    if !(spectral_radius(phi) < 1.0) {
        return Err(Error::NonstationaryCoefficients);
    }
    let kron = phi.kronecker(phi);
    let system: Matrix4<f64> = Matrix4::identity() - kron;
    // column-major vec
    let rhs = Vector4::new(gamma[(0, 0)], gamma[(1, 0)], gamma[(0, 1)], gamma[(1, 1)]);
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonstationaryCoefficients)?;
    let off = 0.5 * (sol[1] + sol[2]);
    Ok(Mat2::new(sol[0], off, off, sol[3]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(phi: &Mat2, gamma: &Mat2, s: &Mat2) -> f64 {
        (s - phi * s * phi.transpose() - gamma).amax()
    }

    #[test]
    fn zero_phi_returns_gamma() {
        let g = Mat2::new(1.0, 0.3, 0.3, 2.0);
        let s = solve_discrete_lyapunov(&Mat2::zeros(), &g).unwrap();
        assert!((s - g).amax() < 1e-15);
    }

    #[test]
    fn scalar_ar1_variance() {
        let s = solve_discrete_lyapunov(&(Mat2::identity() * 0.5), &Mat2::identity()).unwrap();
        assert!((s - Mat2::identity() * (4.0 / 3.0)).amax() < 1e-14);
    }

    #[test]
    fn general_phi_matches_fixed_point_iteration() {
        let phi = Mat2::new(0.9, 0.1, 0.2, 0.5);
        let gamma = Mat2::new(1.0, 0.3, 0.3, 1.0);
        let s = solve_discrete_lyapunov(&phi, &gamma).unwrap();
        assert!(residual(&phi, &gamma, &s) < 1e-10);
        // independent oracle: iterate S <- phi S phi' + gamma to convergence
        let mut it = Mat2::zeros();
        for _ in 0..5000 {
            it = phi * it * phi.transpose() + gamma;
        }
        assert!((it - s).amax() < 1e-8, "{it} vs {s}");
    }

    #[test]
    fn nonstationary_rejected() {
        let phi = Mat2::new(1.002, 0.0, 0.0, 0.5);
        assert_eq!(
            solve_discrete_lyapunov(&phi, &Mat2::identity()),
            Err(Error::NonstationaryCoefficients)
        );
    }
}
