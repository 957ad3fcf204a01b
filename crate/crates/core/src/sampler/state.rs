use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::config::{SrForm, Structure};
use crate::error::Result;
use crate::model::{
    linear_predictor, probit_innovation_from, ArProcess, DyadPanel, Family, ModelParameters,
};
use crate::numerics::{standard_normal, Mat2, SpdMatrix, Vec2, LN_2PI};
use crate::prior::PriorSpec;

/// Everything a step reads but never changes.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub panel: &'a DyadPanel,
    pub prior: &'a PriorSpec,
    pub structure: Structure,
}

impl Model<'_> {
    pub fn family(&self) -> Family {
        self.panel.family()
    }
}

/// Sampler state: parameters plus the working response `z`, which holds the
/// observed `y` with imputed missing cells (Gaussian) or the latent `theta`
/// (binary), in the panel's cell layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub params: ModelParameters,
    pub z: Vec<f64>,
}

impl ChainState {
    /// `g = z - x'beta - s_i - r_j`; zero on the diagonal.
    pub fn residuals(&self, panel: &DyadPanel) -> Result<Vec<f64>> {
        let eta = linear_predictor(panel, &self.params.beta, self.params.beta_layout)?;
        Ok(self.residuals_with(panel, &eta))
    }

    pub(crate) fn residuals_with(&self, panel: &DyadPanel, eta: &[f64]) -> Vec<f64> {
        let a = panel.actors();
        let sr = &self.params.sr;
        let mut g = vec![0.0; panel.cell_count()];
        for t in 0..panel.times() {
            for i in 0..a {
                for j in 0..a {
                    if i != j {
                        let c = panel.cell(i, j, t);
                        g[c] = self.z[c] - eta[c] - sr.sender(i, t) - sr.receiver(j, t);
                    }
                }
            }
        }
        g
    }
}

/// Outcome of one update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Rejected,
    /// Exact draw from the full conditional.
    GibbsExact,
    /// The block is held fixed by the model structure.
    Fixed,
}

/// Per-update outcomes of one scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanFlags {
    pub beta: StepOutcome,
    pub sr: StepOutcome,
    pub phi_sr: StepOutcome,
    pub phi_gg: StepOutcome,
    pub gamma_sr: StepOutcome,
    pub gamma_gg: StepOutcome,
    pub missing: StepOutcome,
    pub theta: StepOutcome,
    pub rho_gg: StepOutcome,
}

impl ScanFlags {
    pub const STEP_NAMES: [&'static str; 9] = [
        "beta", "sr", "phi_sr", "phi_gg", "gamma_sr", "gamma_gg", "missing", "theta", "rho_gg",
    ];

    pub(crate) fn fixed() -> Self {
        let f = StepOutcome::Fixed;
        Self {
            beta: f,
            sr: f,
            phi_sr: f,
            phi_gg: f,
            gamma_sr: f,
            gamma_gg: f,
            missing: f,
            theta: f,
            rho_gg: f,
        }
    }

    pub fn as_array(&self) -> [StepOutcome; 9] {
        [
            self.beta,
            self.sr,
            self.phi_sr,
            self.phi_gg,
            self.gamma_sr,
            self.gamma_gg,
            self.missing,
            self.theta,
            self.rho_gg,
        ]
    }
}

/// One saved draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraw {
    /// 1-based scan index.
    pub scan: usize,
    pub params: ModelParameters,
    /// Working response at the panel's missing cells, in `missing_cells` order:
    /// imputed `y` (Gaussian) or unconstrained `theta` (binary).
    pub imputed: Vec<f64>,
    /// The full latent `theta`, when requested.
    pub latent: Option<Vec<f64>>,
    pub flags: ScanFlags,
}

/// Which proposal an MH step uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    SemiConjugate,
    /// Symmetric random walk with the given scale.
    RandomWalk(f64),
}

pub(crate) fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || libm::log(rng.random::<f64>()) < log_ratio
}

/// Innovation covariance of the residual process under the family's
/// parameterization.
pub fn gg_innovation(params: &ModelParameters, family: Family) -> Mat2 {
    match family {
        Family::Gaussian => params.innov.gamma_gg(),
        Family::Binary => probit_innovation_from(
            params.ar.phi_g,
            params.ar.phi_gg,
            params.rho_gg.unwrap_or(0.0),
        )
        .matrix(),
    }
}

pub(crate) fn gg_process(params: &ModelParameters, family: Family) -> Result<ArProcess> {
    ArProcess::new(params.ar.phi_gg_matrix(), gg_innovation(params, family))
}

/// AR process of the sender/receiver paths, `None` for the static and absent forms.
pub(crate) fn sr_process(params: &ModelParameters, structure: &Structure) -> Result<Option<ArProcess>> {
    match structure.sr {
        SrForm::Ar => ArProcess::new(params.ar.phi_sr, params.innov.gamma_sr).map(Some),
        SrForm::Iid => ArProcess::new(Mat2::zeros(), params.innov.gamma_sr).map(Some),
        SrForm::Static | SrForm::Absent => Ok(None),
    }
}

/// `sum over pairs` of the residual path log density.
pub(crate) fn gg_loglik(panel: &DyadPanel, g: &[f64], process: &ArProcess) -> f64 {
    let tn = panel.times();
    let mut path = vec![0.0; 2 * tn];
    let mut acc = 0.0;
    for (i, j) in panel.pairs() {
        for t in 0..tn {
            path[2 * t] = g[panel.cell(i, j, t)];
            path[2 * t + 1] = g[panel.cell(j, i, t)];
        }
        acc += process.log_density(&path);
    }
    acc
}

pub(crate) fn sr_loglik_with(params: &ModelParameters, process: &ArProcess) -> f64 {
    (0..params.actors())
        .map(|i| process.log_density(params.sr.actor_path(i)))
        .sum()
}

/// Pair residual at time `t`, ordered `(g_ij, g_ji)`.
#[inline]
pub(crate) fn pair_at(panel: &DyadPanel, g: &[f64], i: usize, j: usize, t: usize) -> Vec2 {
    Vec2::new(g[panel.cell(i, j, t)], g[panel.cell(j, i, t)])
}

/// A normal distribution given by precision and `precision * mean`.
#[derive(Debug, Clone)]
pub(crate) struct PrecisionGaussian {
    pub mean: DVector<f64>,
    pub prec: SpdMatrix,
}

impl PrecisionGaussian {
    pub fn new(mut prec: DMatrix<f64>, rhs: &DVector<f64>) -> Result<Self> {
        let n = prec.nrows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (prec[(i, j)] + prec[(j, i)]);
                prec[(i, j)] = v;
                prec[(j, i)] = v;
            }
        }
        let prec = SpdMatrix::new(prec)?;
        let mean = prec.solve(rhs);
        Ok(Self { mean, prec })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.mean.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| standard_normal(rng)));
        &self.mean + self.prec.solve_upper_transpose(&z)
    }

    pub fn logpdf(&self, x: &[f64]) -> f64 {
        let n = self.mean.len();
        let d = DVector::from_iterator(n, x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let q = (self.prec.matrix() * &d).dot(&d);
        -0.5 * (n as f64 * LN_2PI - self.prec.log_det() + q)
    }
}

/// Prior precision and `precision * mean` of a normal prior restricted to
/// the coordinates in `free`, the others held at zero.
pub(crate) fn restricted_prior(
    mean: &[f64],
    cov: &SpdMatrix,
    free: &[usize],
) -> (DMatrix<f64>, DVector<f64>) {
    let p = cov.inverse();
    let pm = &p * DVector::from_column_slice(mean);
    let k = free.len();
    let prec = DMatrix::from_fn(k, k, |a, b| p[(free[a], free[b])]);
    let rhs = DVector::from_fn(k, |a, _| pm[free[a]]);
    (prec, rhs)
}
