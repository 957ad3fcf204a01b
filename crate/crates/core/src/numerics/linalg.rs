use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;

const SYMMETRY_TOL: f64 = 1e-10;

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `L L' = m`.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// A symmetric positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&matrix)?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let chol = Cholesky::new(matrix.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { matrix, chol })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn from_mat2(m: &Mat2) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(2, 2, m.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn chol_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..self.dim()).map(|i| libm::log(l[(i, i)])).sum::<f64>() * 2.0
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let mut inv = self.chol.inverse();
        // symmetrize away round-off
        for i in 0..inv.nrows() {
            for j in 0..i {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `x' M^{-1} x`.
    pub fn inv_quad_form(&self, x: &DVector<f64>) -> f64 {
        let l = self.chol.l_dirty();
        let z = l
            .solve_lower_triangular(x)
            .expect("cholesky factor has positive diagonal");
        z.norm_squared()
    }

    /// Solves `L' x = z`; maps a standard normal `z` to a draw with covariance `M^{-1}`.
    pub fn solve_upper_transpose(&self, z: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .tr_solve_lower_triangular(z)
            .expect("cholesky factor has positive diagonal")
    }

    /// `L z`; maps a standard normal `z` to a draw with covariance `M`.
    pub fn mul_chol(&self, z: &DVector<f64>) -> DVector<f64> {
        self.chol.l() * z
    }

    pub fn to_mat2(&self) -> Mat2 {
        assert_eq!(self.dim(), 2);
        Mat2::new(
            self.matrix[(0, 0)],
            self.matrix[(0, 1)],
            self.matrix[(1, 0)],
            self.matrix[(1, 1)],
        )
    }
}

/// Cholesky-factored 2x2 SPD matrix, used in the per-dyad inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spd2 {
    m: Mat2,
    l11: f64,
    l21: f64,
    l22: f64,
}

impl Spd2 {
    pub fn new(m: Mat2) -> Result<Self> {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        if (b - c).abs() > SYMMETRY_TOL * m.amax().max(f64::MIN_POSITIVE) {
            return Err(Error::NotSymmetric);
        }
        if a <= 0.0 {
            return Err(Error::NotPositiveDefinite);
        }
        let l11 = libm::sqrt(a);
        let l21 = b / l11;
        let rem = d - l21 * l21;
        if rem <= 0.0 || rem <= 1e-14 * d.abs() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            m,
            l11,
            l21,
            l22: libm::sqrt(rem),
        })
    }

    pub fn matrix(&self) -> Mat2 {
        self.m
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (libm::log(self.l11) + libm::log(self.l22))
    }

    /// `x' M^{-1} x`.
    pub fn inv_quad_form(&self, x: Vec2) -> f64 {
        let z1 = x[0] / self.l11;
        let z2 = (x[1] - self.l21 * z1) / self.l22;
        z1 * z1 + z2 * z2
    }

    /// Log density of `mvn(0, M)` at `x`.
    pub fn logpdf(&self, x: Vec2) -> f64 {
        -0.5 * (2.0 * super::LN_2PI + self.log_det() + self.inv_quad_form(x))
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)];
        let off = -0.5 * (self.m[(0, 1)] + self.m[(1, 0)]) / det;
        Mat2::new(self.m[(1, 1)] / det, off, off, self.m[(0, 0)] / det)
    }

    /// `L z`.
    pub fn mul_chol(&self, z: Vec2) -> Vec2 {
        Vec2::new(self.l11 * z[0], self.l21 * z[0] + self.l22 * z[1])
    }
}

/// Largest eigenvalue modulus of a real 2x2 matrix.
pub fn spectral_radius(m: &Mat2) -> f64 {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let root = libm::sqrt(disc);
        (0.5 * tr + root).abs().max((0.5 * tr - root).abs())
    } else {
        libm::sqrt(det)
    }
}
