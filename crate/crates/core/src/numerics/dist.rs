use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use super::linalg::SpdMatrix;
use super::special::{ln_gamma, ln_multigamma};
use super::LN_2PI;
use crate::error::{Error, Result};

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Univariate normal log density with variance `var`.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + libm::log(var) + d * d / var)
}

/// Exact multivariate normal log density.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &SpdMatrix) -> Result<f64> {
    let dim = cov.dim();
    for len in [x.len(), mean.len()] {
        if len != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: len,
            });
        }
    }
    let diff = DVector::from_iterator(dim, x.iter().zip(mean).map(|(a, b)| a - b));
    Ok(-0.5 * (dim as f64 * LN_2PI + cov.log_det() + cov.inv_quad_form(&diff)))
}

/// One draw from `mvn(mean, cov)`.
pub fn mvn_sample<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &SpdMatrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if mean.len() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: mean.len(),
        });
    }
    let z = DVector::from_iterator(mean.len(), (0..mean.len()).map(|_| standard_normal(rng)));
    let lz = cov.mul_chol(&z);
    Ok(mean.iter().zip(lz.iter()).map(|(m, v)| m + v).collect())
}

/// Inverse-gamma with density proportional to `x^(-shape-1) exp(-rate / x)`.
///
/// The mean `rate / (shape - 1)` exists only for `shape > 1`; at `shape <= 1`
/// draws are valid but have infinite mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGamma {
    shape: f64,
    rate: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::NonpositiveHyperparameter(shape));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::NonpositiveHyperparameter(rate));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, 1.0 / self.rate).expect("validated parameters");
        loop {
            let x: f64 = g.sample(rng);
            if x > 0.0 {
                return 1.0 / x;
            }
        }
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.shape * libm::log(self.rate)
            - ln_gamma(self.shape)
            - (self.shape + 1.0) * libm::log(x)
            - self.rate / x
    }
}

/// Inverse-Wishart with density proportional to
/// `|X|^(-(df + d + 1)/2) exp(-tr(scale X^-1) / 2)`, so that
/// `E[X] = scale / (df - d - 1)`.
///
/// In the `inverse-Wishart(v, S^-1)` notation where `S^-1` is the
/// Wishart scale of `X^-1`, `scale` here is `S`.
#[derive(Debug, Clone)]
pub struct InverseWishart {
    df: f64,
    scale: SpdMatrix,
    // Cholesky factor of scale^-1, the Wishart scale of X^-1
    wishart_chol: DMatrix<f64>,
}

impl InverseWishart {
    pub fn new(df: f64, scale: SpdMatrix) -> Result<Self> {
        let dim = scale.dim();
        if !(df > dim as f64 - 1.0) || !df.is_finite() {
            return Err(Error::InvalidDegreesOfFreedom { df, dim });
        }
        let inv = SpdMatrix::new(scale.inverse())?;
        Ok(Self {
            df,
            wishart_chol: inv.chol_l(),
            scale,
        })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn scale(&self) -> &SpdMatrix {
        &self.scale
    }

    /// Bartlett decomposition of the Wishart draw `W = (L A)(L A)'`, returning `W^-1`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpdMatrix> {
        let d = self.scale.dim();
        let mut a = DMatrix::zeros(d, d);
        for i in 0..d {
            let chi = ChiSquared::new(self.df - i as f64).expect("df validated");
            a[(i, i)] = libm::sqrt(chi.sample(rng));
            for j in 0..i {
                a[(i, j)] = standard_normal(rng);
            }
        }
        let la = &self.wishart_chol * a;
        let la_inv = la
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .ok_or(Error::NotPositiveDefinite)?;
        let mut x = la_inv.transpose() * la_inv;
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (x[(i, j)] + x[(j, i)]);
                x[(i, j)] = v;
                x[(j, i)] = v;
            }
        }
        SpdMatrix::new(x)
    }

    pub fn logpdf(&self, x: &SpdMatrix) -> f64 {
        let d = self.scale.dim();
        if x.dim() != d {
            return f64::NEG_INFINITY;
        }
        let df = self.df;
        let tr = (self.scale.matrix() * x.inverse()).trace();
        0.5 * df * self.scale.log_det()
            - 0.5 * df * d as f64 * core::f64::consts::LN_2
            - ln_multigamma(0.5 * df, d)
            - 0.5 * (df + d as f64 + 1.0) * x.log_det()
            - 0.5 * tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn mvn_logpdf_standard() {
        let cov = SpdMatrix::identity(1);
        let v = mvn_logpdf(&[0.0], &[0.0], &cov).unwrap();
        assert!((v + 0.5 * (2.0 * core::f64::consts::PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn mvn_logpdf_at_mean() {
        let cov = SpdMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0],
        ))
        .unwrap();
        let m = [1.0, -2.0, 0.5];
        let v = mvn_logpdf(&m, &m, &cov).unwrap();
        let det = cov.matrix().determinant();
        assert!((v + 0.5 * (3.0 * LN_2PI + det.ln())).abs() < 1e-13);
    }

    #[test]
    fn mvn_logpdf_matches_dense_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let cov = SpdMatrix::new(m.clone()).unwrap();
        let v = mvn_logpdf(&[1.0, 1.0], &[0.0, 0.0], &cov).unwrap();
        // dense oracle: inverse via adjugate
        let det = 2.0 * 2.0 - 1.0;
        let inv = DMatrix::from_row_slice(2, 2, &[2.0 / det, -1.0 / det, -1.0 / det, 2.0 / det]);
        let x = DVector::from_row_slice(&[1.0, 1.0]);
        let q = (x.transpose() * inv * &x)[(0, 0)];
        let oracle = -0.5 * (2.0 * LN_2PI + f64::ln(det) + q);
        assert!((v - oracle).abs() < 1e-14);
    }

    #[test]
    fn mvn_logpdf_dimension_mismatch() {
        let cov = SpdMatrix::identity(2);
        assert!(matches!(
            mvn_logpdf(&[0.0], &[0.0, 0.0], &cov),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mvn_logpdf_integrates_to_one_in_1d() {
        for var in [0.3, 1.0, 4.5] {
            let cov = SpdMatrix::new(DMatrix::from_element(1, 1, var)).unwrap();
            let sd: f64 = var.sqrt();
            let n = 20_000;
            let h = 16.0 * sd / n as f64;
            let mut acc = 0.0;
            for k in 0..=n {
                let x = -8.0 * sd + k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                acc += w * mvn_logpdf(&[x], &[0.0], &cov).unwrap().exp();
            }
            assert!((acc * h - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mvn_sample_moments() {
        let cov = SpdMatrix::identity(2);
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let mut s = [[0.0; 2]; 2];
        let mut m = [0.0; 2];
        for _ in 0..n {
            let x = mvn_sample(&[0.0, 0.0], &cov, &mut rng).unwrap();
            for a in 0..2 {
                m[a] += x[a];
                for b in 0..2 {
                    s[a][b] += x[a] * x[b];
                }
            }
        }
        for a in 0..2 {
            assert!((m[a] / n as f64).abs() < 3.0 / (n as f64).sqrt());
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s[a][b] / n as f64 - want).abs() < 0.02);
            }
        }
    }

    #[test]
    fn mvn_sample_rejects_degenerate() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(SpdMatrix::new(m).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn mvn_sample_deterministic() {
        let cov = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0])).unwrap();
        let draw = |seed| {
            let mut rng = RngStream::new(seed, 0);
            (0..50)
                .flat_map(|_| mvn_sample(&[1.0, 2.0], &cov, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = draw(5);
        let b = draw(5);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn inverse_wishart_mean() {
        let iw = InverseWishart::new(10.0, SpdMatrix::identity(2)).unwrap();
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..n {
            acc += iw.sample(&mut rng).unwrap().matrix();
        }
        acc /= n as f64;
        let target = 1.0 / 7.0;
        assert!((acc[(0, 0)] - target).abs() < 0.02 * target);
        assert!((acc[(1, 1)] - target).abs() < 0.02 * target);
        assert!(acc[(0, 1)].abs() < 0.02 * target);
    }

    #[test]
    fn inverse_wishart_logpdf_at_mode() {
        // mode of IW(df, S) is S / (df + d + 1)
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let df = 6.0;
        let iw = InverseWishart::new(df, SpdMatrix::new(s.clone()).unwrap()).unwrap();
        let mode = SpdMatrix::new(&s / (df + 3.0)).unwrap();
        // direct formula: at the mode tr(S X^-1) = (df + d + 1) d
        let det_s: f64 = s.determinant();
        let det_x = det_s / (df + 3.0f64).powi(2);
        let lmg = 0.5 * std::f64::consts::PI.ln()
            + ln_gamma(df / 2.0)
            + ln_gamma(df / 2.0 - 0.5);
        let direct = df / 2.0 * det_s.ln()
            - df * std::f64::consts::LN_2
            - lmg
            - (df + 3.0) / 2.0 * det_x.ln()
            - (df + 3.0);
        assert!((iw.logpdf(&mode) - direct).abs() < 1e-12);
    }

    #[test]
    fn inverse_wishart_invalid_df() {
        assert!(matches!(
            InverseWishart::new(1.0, SpdMatrix::identity(2)),
            Err(Error::InvalidDegreesOfFreedom { .. })
        ));
    }

    #[test]
    fn inverse_gamma_mean() {
        let ig = InverseGamma::new(3.0, 2.0).unwrap();
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| ig.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn inverse_gamma_boundary_shape_one() {
        let ig = InverseGamma::new(1.0, 1.0).unwrap();
        let mut rng = RngStream::new(4, 1);
        for _ in 0..1000 {
            let x = ig.sample(&mut rng);
            assert!(x.is_finite() && x > 0.0);
        }
    }

    #[test]
    fn inverse_gamma_rejects_zero_shape() {
        assert_eq!(
            InverseGamma::new(0.0, 1.0),
            Err(Error::NonpositiveHyperparameter(0.0))
        );
    }

    #[test]
    fn inverse_gamma_logpdf_normalizes() {
        let ig = InverseGamma::new(2.5, 1.5).unwrap();
        let n = 400_000;
        let h = 200.0 / n as f64;
        let total: f64 = (1..=n).map(|k| ig.logpdf(k as f64 * h).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-3);
    }
}
