//! Updates shared by both families (steps 1-5) and the Gaussian-only
//! variance and missing-data updates (steps 6-7).
//!
//! Every step reads the working response `z` of the [`ChainState`]; for the
//! binary family that is the latent `theta`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rand::Rng;

use super::config::SrForm;
use super::state::{
    accept, gg_innovation, gg_loglik, gg_process, pair_at, restricted_prior, sr_loglik_with,
    sr_process, ChainState, Model, PrecisionGaussian, Proposal, StepOutcome,
};
use crate::error::Result;
use crate::model::{
    exchangeable, linear_predictor, wong_inverse, wong_transform, ArProcess, Family,
    ModelParameters, PrecisionBlocks,
};
use crate::numerics::{
    standard_normal, InverseGamma, InverseWishart, Mat2, Spd2, SpdMatrix, Vec2,
};

/// Step 1: Gibbs draw of the stacked `beta` given effects and residual covariance.
pub fn update_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    rng: &mut R,
) -> Result<StepOutcome> {
    let panel = model.panel;
    let p = panel.covariate_count();
    let tn = panel.times();
    let layout = state.params.beta_layout;
    let nb = layout.len(tn, p);
    let q = gg_process(&state.params, model.family())?.precision_blocks(tn);
    let (mut prec, mut rhs) = restricted_prior(
        &model.prior.beta_mean,
        &model.prior.beta_cov,
        &(0..nb).collect::<Vec<_>>(),
    );
    let sr = &state.params.sr;
    let z = &state.z;
    // 2 x p design rows and the effect-adjusted responses of one pair
    let mut xs: Vec<[&[f64]; 2]> = Vec::with_capacity(tn);
    let mut bs: Vec<Vec2> = Vec::with_capacity(tn);
    for (i, j) in panel.pairs() {
        xs.clear();
        bs.clear();
        for t in 0..tn {
            let (cij, cji) = (panel.cell(i, j, t), panel.cell(j, i, t));
            xs.push([panel.covariate_row(i, j, t), panel.covariate_row(j, i, t)]);
            bs.push(Vec2::new(
                z[cij] - sr.sender(i, t) - sr.receiver(j, t),
                z[cji] - sr.sender(j, t) - sr.receiver(i, t),
            ));
        }
        for u in 0..tn {
            let ou = layout.offset(u, p);
            let mut qb = q.diag[u] * bs[u];
            if u + 1 < tn {
                qb += q.upper[u] * bs[u + 1];
            }
            if u > 0 {
                qb += q.upper[u - 1].transpose() * bs[u - 1];
            }
            for k in 0..p {
                rhs[ou + k] += xs[u][0][k] * qb[0] + xs[u][1][k] * qb[1];
            }
            add_xqx(&mut prec, ou, ou, &xs[u], &q.diag[u], &xs[u], p);
            if u + 1 < tn {
                let ov = layout.offset(u + 1, p);
                add_xqx(&mut prec, ou, ov, &xs[u], &q.upper[u], &xs[u + 1], p);
                add_xqx(&mut prec, ov, ou, &xs[u + 1], &q.upper[u].transpose(), &xs[u], p);
            }
        }
    }
    let post = PrecisionGaussian::new(prec, &rhs)?;
    let draw = post.sample(rng);
    state.params.beta.copy_from_slice(draw.as_slice());
    Ok(StepOutcome::GibbsExact)
}

// m[ou.., ov..] += xu' q xv for 2 x p row pairs
fn add_xqx(m: &mut DMatrix<f64>, ou: usize, ov: usize, xu: &[&[f64]; 2], q: &Mat2, xv: &[&[f64]; 2], p: usize) {
    for k in 0..p {
        let w0 = xu[0][k] * q[(0, 0)] + xu[1][k] * q[(1, 0)];
        let w1 = xu[0][k] * q[(0, 1)] + xu[1][k] * q[(1, 1)];
        for l in 0..p {
            m[(ou + k, ov + l)] += w0 * xv[0][l] + w1 * xv[1][l];
        }
    }
}

/// Sum over `j != i` of the pair paths `(z_ij - eta_ij - r_j, z_ji - eta_ji - s_j)`,
/// the data on actor `i`'s own path `(s_i, r_i)`.
fn actor_data(state: &ChainState, model: &Model, eta: &[f64], i: usize) -> Vec<f64> {
    let panel = model.panel;
    let tn = panel.times();
    let sr = &state.params.sr;
    let mut acc = vec![0.0; 2 * tn];
    for j in 0..panel.actors() {
        if j == i {
            continue;
        }
        for t in 0..tn {
            let (cij, cji) = (panel.cell(i, j, t), panel.cell(j, i, t));
            acc[2 * t] += state.z[cij] - eta[cij] - sr.receiver(j, t);
            acc[2 * t + 1] += state.z[cji] - eta[cji] - sr.sender(j, t);
        }
    }
    acc
}

/// Step 2: Gibbs draw of each actor's sender/receiver path in turn.
pub fn update_sr<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    rng: &mut R,
) -> Result<StepOutcome> {
    let panel = model.panel;
    let tn = panel.times();
    let a = panel.actors();
    let eta = linear_predictor(panel, &state.params.beta, state.params.beta_layout)?;
    let qgg = gg_process(&state.params, model.family())?.precision_blocks(tn);
    let others = a.saturating_sub(1) as f64;
    match model.structure.sr {
        SrForm::Absent => Ok(StepOutcome::Fixed),
        SrForm::Ar | SrForm::Iid => {
            let qsr = sr_process(&state.params, &model.structure)?
                .expect("dynamic form")
                .precision_blocks(tn);
            let prec = qgg.to_dense() * others + qsr.to_dense();
            // the posterior precision is shared by all actors; h varies
            let proto = PrecisionGaussian::new(prec, &DVector::zeros(2 * tn))?;
            let mut h = vec![0.0; 2 * tn];
            for i in 0..a {
                let data = actor_data(state, model, &eta, i);
                qgg.mul_path(&data, &mut h);
                let mean = proto.prec.solve(&DVector::from_column_slice(&h));
                let zv = DVector::from_iterator(2 * tn, (0..2 * tn).map(|_| standard_normal(rng)));
                let draw = mean + proto.prec.solve_upper_transpose(&zv);
                state.params.sr.actor_path_mut(i).copy_from_slice(draw.as_slice());
            }
            Ok(StepOutcome::GibbsExact)
        }
        SrForm::Static => {
            let sum_q = block_sum(&qgg);
            let gamma = Spd2::new(state.params.innov.gamma_sr)?;
            let prec = sum_q * others + gamma.inverse();
            let post = Spd2::new(symmetrize(prec))?;
            let cov = Spd2::new(symmetrize(post.inverse()))?;
            let mut h = vec![0.0; 2 * tn];
            for i in 0..a {
                let data = actor_data(state, model, &eta, i);
                qgg.mul_path(&data, &mut h);
                let hv = (0..tn).fold(Vec2::zeros(), |acc, t| acc + Vec2::new(h[2 * t], h[2 * t + 1]));
                let mean = cov.matrix() * hv;
                let draw = mean + cov.mul_chol(Vec2::new(standard_normal(rng), standard_normal(rng)));
                for t in 0..tn {
                    state.params.sr.set(i, t, draw);
                }
            }
            Ok(StepOutcome::GibbsExact)
        }
    }
}

fn block_sum(q: &PrecisionBlocks) -> Mat2 {
    let mut s = Mat2::zeros();
    for d in &q.diag {
        s += d;
    }
    for u in &q.upper {
        s += u + u.transpose();
    }
    s
}

fn symmetrize(m: Mat2) -> Mat2 {
    let o = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], o, o, m[(1, 1)])
}

/// Sufficient statistics of the lag-one regression `x_t = Phi x_{t-1} + e_t`:
/// `xx = sum x_{t-1} x_{t-1}'` and `yx = sum x_t x_{t-1}'`.
fn sr_lag_stats(params: &ModelParameters) -> (Mat2, Mat2) {
    let mut xx = Mat2::zeros();
    let mut yx = Mat2::zeros();
    for i in 0..params.actors() {
        for t in 1..params.times() {
            let prev = params.sr.get(i, t - 1);
            let cur = params.sr.get(i, t);
            xx += prev * prev.transpose();
            yx += cur * prev.transpose();
        }
    }
    (xx, yx)
}

/// Semi-conjugate proposal for `vec_row(Phi_sr)` ignoring the initial-state factor.
fn phi_sr_proposal(model: &Model, gamma: &Mat2, xx: &Mat2, yx: &Mat2) -> Result<PrecisionGaussian> {
    let ginv = Spd2::new(*gamma)?.inverse();
    let (p0, r0) = restricted_prior(&model.prior.phi_sr_mean, &model.prior.phi_sr_cov, &[0, 1, 2, 3]);
    let kron = Matrix4::from_fn(|r, c| ginv[(r / 2, c / 2)] * xx[(r % 2, c % 2)]);
    let gyx = ginv * yx;
    let data_rhs = Vector4::new(gyx[(0, 0)], gyx[(0, 1)], gyx[(1, 0)], gyx[(1, 1)]);
    let prec = p0 + DMatrix::from_iterator(4, 4, kron.iter().copied());
    let rhs = r0 + DVector::from_iterator(4, data_rhs.iter().copied());
    PrecisionGaussian::new(prec, &rhs)
}

fn sr_target(model: &Model, params: &ModelParameters, phi: Mat2, gamma: Mat2) -> f64 {
    let lp = model.prior.log_prior_phi_sr(&phi) + model.prior.log_prior_gamma_sr(&gamma);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    match ArProcess::new(phi, gamma) {
        Ok(process) => lp + sr_loglik_with(params, &process),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Step 3: MH update of `Phi_sr`.
pub fn update_phi_sr<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    proposal: Proposal,
    rng: &mut R,
) -> Result<StepOutcome> {
    if model.structure.sr != SrForm::Ar {
        return Ok(StepOutcome::Fixed);
    }
    let params = &state.params;
    let gamma = params.innov.gamma_sr;
    let cur = params.ar.phi_sr;
    let cur_v = params.ar.phi_sr_vec();
    let (prop, log_q_ratio) = match proposal {
        Proposal::SemiConjugate => {
            let (xx, yx) = sr_lag_stats(params);
            let q = phi_sr_proposal(model, &gamma, &xx, &yx)?;
            let d = q.sample(rng);
            let new = [d[0], d[1], d[2], d[3]];
            (new, q.logpdf(&cur_v) - q.logpdf(&new))
        }
        Proposal::RandomWalk(step) => {
            let new = cur_v.map(|v| v + step * standard_normal(rng));
            (new, 0.0)
        }
    };
    let phi_new = Mat2::new(prop[0], prop[1], prop[2], prop[3]);
    let t_new = sr_target(model, params, phi_new, gamma);
    if t_new == f64::NEG_INFINITY {
        return Ok(StepOutcome::Rejected);
    }
    let t_cur = sr_target(model, params, cur, gamma);
    if accept(t_new - t_cur + log_q_ratio, rng) {
        state.params.ar.phi_sr = phi_new;
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}

/// Lag-one regression statistics of the residual pairs, split by the rows
/// of the exchangeable design `Z = [[g_ij, g_ji], [g_ji, g_ij]]` at `t - 1`
/// so that proposals can be formed for any innovation covariance `G^-1`:
/// `Z'G^-1 Z = sum_ab ginv_ab zz[a][b]` and `Z'G^-1 g = sum_ab ginv_ab zy[a][b]`.
struct GgLagStats {
    zz: [[Mat2; 2]; 2],
    zy: [[Vec2; 2]; 2],
}

impl GgLagStats {
    fn new(model: &Model, g: &[f64]) -> Self {
        let panel = model.panel;
        let mut zz = [[Mat2::zeros(); 2]; 2];
        let mut zy = [[Vec2::zeros(); 2]; 2];
        for (i, j) in panel.pairs() {
            for t in 1..panel.times() {
                let prev = pair_at(panel, g, i, j, t - 1);
                let cur = pair_at(panel, g, i, j, t);
                let rows = [prev, Vec2::new(prev[1], prev[0])];
                for a in 0..2 {
                    for b in 0..2 {
                        zz[a][b] += rows[a] * rows[b].transpose();
                        zy[a][b] += rows[a] * cur[b];
                    }
                }
            }
        }
        Self { zz, zy }
    }

    fn proposal(&self, model: &Model, gamma: &Mat2, free: &[usize]) -> Result<PrecisionGaussian> {
        let ginv = Spd2::new(*gamma)?.inverse();
        let (mut prec, mut rhs) =
            restricted_prior(&model.prior.phi_gg_mean, &model.prior.phi_gg_cov, free);
        for a in 0..2 {
            for b in 0..2 {
                let w = ginv[(a, b)];
                for (x, &fx) in free.iter().enumerate() {
                    rhs[x] += w * self.zy[a][b][fx];
                    for (y, &fy) in free.iter().enumerate() {
                        prec[(x, y)] += w * self.zz[a][b][(fx, fy)];
                    }
                }
            }
        }
        PrecisionGaussian::new(prec, &rhs)
    }
}

fn gg_target(model: &Model, g: &[f64], params: &ModelParameters) -> f64 {
    let lp = model.prior.log_prior_phi_gg(params.ar.phi_g, params.ar.phi_gg);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    let gamma = gg_innovation(params, model.family());
    if Spd2::new(gamma).is_err() {
        return f64::NEG_INFINITY;
    }
    match ArProcess::new(params.ar.phi_gg_matrix(), gamma) {
        Ok(process) => lp + gg_loglik(model.panel, g, &process),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Step 4: MH update of `(phi_g, phi_gg)`.
///
/// For the binary family the innovation covariance is a function of
/// `(phi_g, phi_gg, rho_gg)`, so the reverse proposal density is built from
/// the innovation implied by the proposed coefficients.
pub fn update_phi_gg<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    proposal: Proposal,
    rng: &mut R,
) -> Result<StepOutcome> {
    if !model.structure.gg_temporal {
        return Ok(StepOutcome::Fixed);
    }
    let free: &[usize] = if model.structure.gg_reciprocal { &[0, 1] } else { &[0] };
    let g = state.residuals(model.panel)?;
    let family = model.family();
    let cur = [state.params.ar.phi_g, state.params.ar.phi_gg];
    let mut cand = state.params.clone();
    let log_q_ratio = match proposal {
        Proposal::SemiConjugate => {
            let stats = GgLagStats::new(model, &g);
            let fwd = stats.proposal(model, &gg_innovation(&state.params, family), free)?;
            let d = fwd.sample(rng);
            let mut new = [0.0; 2];
            for (x, &f) in free.iter().enumerate() {
                new[f] = d[x];
            }
            cand.ar.phi_g = new[0];
            cand.ar.phi_gg = new[1];
            let pick = |v: [f64; 2]| free.iter().map(|&f| v[f]).collect::<Vec<_>>();
            let rev = match family {
                Family::Gaussian => fwd.clone(),
                Family::Binary => {
                    let gamma_new = gg_innovation(&cand, family);
                    match stats.proposal(model, &gamma_new, free) {
                        Ok(r) => r,
                        Err(_) => return Ok(StepOutcome::Rejected),
                    }
                }
            };
            rev.logpdf(&pick(cur)) - fwd.logpdf(&pick(new))
        }
        Proposal::RandomWalk(step) => {
            cand.ar.phi_g += step * standard_normal(rng);
            if model.structure.gg_reciprocal {
                cand.ar.phi_gg += step * standard_normal(rng);
            }
            0.0
        }
    };
    let t_new = gg_target(model, &g, &cand);
    if t_new == f64::NEG_INFINITY {
        return Ok(StepOutcome::Rejected);
    }
    let t_cur = gg_target(model, &g, &state.params);
    if accept(t_new - t_cur + log_q_ratio, rng) {
        state.params.ar = cand.ar;
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}

/// Step 5: update of `Gamma_sr`. MH with an inverse-Wishart proposal for AR
/// effects; an exact inverse-Wishart draw for the static and independent forms.
pub fn update_gamma_sr<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    proposal: Proposal,
    rng: &mut R,
) -> Result<StepOutcome> {
    let params = &state.params;
    let a = params.actors();
    let tn = params.times();
    let prior = model.prior;
    let (ss, n, exact) = match model.structure.sr {
        SrForm::Absent => return Ok(StepOutcome::Fixed),
        SrForm::Static => {
            let ss = (0..a).fold(Mat2::zeros(), |acc, i| {
                let v = params.sr.get(i, 0);
                acc + v * v.transpose()
            });
            (ss, a, true)
        }
        SrForm::Iid => {
            let mut ss = Mat2::zeros();
            for i in 0..a {
                for t in 0..tn {
                    let v = params.sr.get(i, t);
                    ss += v * v.transpose();
                }
            }
            (ss, a * tn, true)
        }
        SrForm::Ar => {
            let phi = params.ar.phi_sr;
            let mut ss = Mat2::zeros();
            for i in 0..a {
                for t in 1..tn {
                    let e = params.sr.get(i, t) - phi * params.sr.get(i, t - 1);
                    ss += e * e.transpose();
                }
            }
            (ss, a * (tn - 1), false)
        }
    };
    let iw = || -> Result<InverseWishart> {
        let scale = SpdMatrix::new(DMatrix::from_iterator(
            2,
            2,
            (symmetrize(ss) + prior.s_sr.to_mat2()).iter().copied(),
        ))?;
        InverseWishart::new(n as f64 + prior.v_sr, scale)
    };
    if exact {
        state.params.innov.gamma_sr = symmetrize(iw()?.sample(rng)?.to_mat2());
        return Ok(StepOutcome::GibbsExact);
    }
    let cur = params.innov.gamma_sr;
    let phi = params.ar.phi_sr;
    let (new, log_q_ratio) = match proposal {
        Proposal::SemiConjugate => {
            let dist = iw()?;
            let draw = dist.sample(rng)?;
            let cur_spd = SpdMatrix::from_mat2(&cur)?;
            (symmetrize(draw.to_mat2()), dist.logpdf(&cur_spd) - dist.logpdf(&draw))
        }
        Proposal::RandomWalk(step) => {
            let (vs, vr) = (cur[(0, 0)], cur[(1, 1)]);
            let rho = cur[(0, 1)] / libm::sqrt(vs * vr);
            let vs2 = vs * libm::exp(step * standard_normal(rng));
            let vr2 = vr * libm::exp(step * standard_normal(rng));
            let rho2 = rho + step * standard_normal(rng);
            if !(rho2.abs() < 1.0) {
                return Ok(StepOutcome::Rejected);
            }
            let c = rho2 * libm::sqrt(vs2 * vr2);
            // Jacobian of (log vs, log vr, rho) -> Gamma is vs vr sqrt(vs vr)
            let jac = |a: f64, b: f64| libm::log(a * b) + 0.5 * libm::log(a * b);
            (Mat2::new(vs2, c, c, vr2), jac(vs2, vr2) - jac(vs, vr))
        }
    };
    let t_new = sr_target(model, params, phi, new);
    if t_new == f64::NEG_INFINITY {
        return Ok(StepOutcome::Rejected);
    }
    let t_cur = sr_target(model, params, phi, cur);
    if accept(t_new - t_cur + log_q_ratio, rng) {
        state.params.innov.gamma_sr = new;
        Ok(StepOutcome::Accepted)
    } else {
        Ok(StepOutcome::Rejected)
    }
}

/// Step 6 (Gaussian): update of `Gamma_gg` through the sum/difference
/// variances `(sigma_a^2, sigma_b^2)`, or the single variance `gamma_g^2`
/// when the reciprocal component is switched off. Exact when the residuals
/// are independent over time, MH otherwise.
pub fn update_gamma_gg<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    proposal: Proposal,
    rng: &mut R,
) -> Result<StepOutcome> {
    let panel = model.panel;
    let prior = model.prior;
    let g = state.residuals(panel)?;
    let phi = state.params.ar.phi_gg_matrix();
    let start = usize::from(model.structure.gg_temporal);
    let steps = panel.times().saturating_sub(start);
    let mut ssa = 0.0;
    let mut ssb = 0.0;
    for (i, j) in panel.pairs() {
        for t in start..panel.times() {
            let mut e = pair_at(panel, &g, i, j, t);
            if t > 0 {
                e -= phi * pair_at(panel, &g, i, j, t - 1);
            }
            let (s, d) = (e[0] + e[1], e[0] - e[1]);
            ssa += s * s;
            ssb += d * d;
        }
    }
    let pairs = panel.pair_count() * steps;
    let exact = !model.structure.gg_temporal;
    let lik = |gamma: Mat2| -> f64 {
        match ArProcess::new(phi, gamma) {
            Ok(process) => gg_loglik(panel, &g, &process),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    if model.structure.gg_reciprocal {
        let pa = InverseGamma::new(prior.alpha_a + 0.5 * pairs as f64, prior.delta_a + 0.5 * ssa)?;
        let pb = InverseGamma::new(prior.alpha_b + 0.5 * pairs as f64, prior.delta_b + 0.5 * ssb)?;
        let (ca, cb) = wong_inverse(state.params.innov.gamma_g2, state.params.innov.lambda_gg)?;
        let (na, nb, log_q_ratio) = match proposal {
            _ if exact => (pa.sample(rng), pb.sample(rng), 0.0),
            Proposal::SemiConjugate => {
                let (na, nb) = (pa.sample(rng), pb.sample(rng));
                let q = pa.logpdf(ca) + pb.logpdf(cb) - pa.logpdf(na) - pb.logpdf(nb);
                (na, nb, q)
            }
            Proposal::RandomWalk(step) => {
                let na = ca * libm::exp(step * standard_normal(rng));
                let nb = cb * libm::exp(step * standard_normal(rng));
                (na, nb, libm::log(na * nb) - libm::log(ca * cb))
            }
        };
        let (g2, lam) = wong_transform(na, nb)?;
        if exact {
            state.params.innov.gamma_g2 = g2;
            state.params.innov.lambda_gg = lam;
            return Ok(StepOutcome::GibbsExact);
        }
        let t_new = lik(exchangeable(g2, lam * g2)) + prior.log_prior_wong(na, nb);
        if t_new == f64::NEG_INFINITY {
            return Ok(StepOutcome::Rejected);
        }
        let t_cur = lik(state.params.innov.gamma_gg()) + prior.log_prior_wong(ca, cb);
        if accept(t_new - t_cur + log_q_ratio, rng) {
            state.params.innov.gamma_g2 = g2;
            state.params.innov.lambda_gg = lam;
            Ok(StepOutcome::Accepted)
        } else {
            Ok(StepOutcome::Rejected)
        }
    } else {
        // e_ij^2 + e_ji^2 = (s^2 + d^2) / 2 over both directions
        let ss = 0.5 * (ssa + ssb);
        let n = 2 * pairs;
        let post = InverseGamma::new(prior.alpha_a + 0.5 * n as f64, prior.delta_a + 0.5 * ss)?;
        let cur = state.params.innov.gamma_g2;
        let (new, log_q_ratio) = match proposal {
            _ if exact => (post.sample(rng), 0.0),
            Proposal::SemiConjugate => {
                let v = post.sample(rng);
                (v, post.logpdf(cur) - post.logpdf(v))
            }
            Proposal::RandomWalk(step) => {
                let v = cur * libm::exp(step * standard_normal(rng));
                (v, libm::log(v) - libm::log(cur))
            }
        };
        if exact {
            state.params.innov.gamma_g2 = new;
            state.params.innov.lambda_gg = 0.0;
            return Ok(StepOutcome::GibbsExact);
        }
        let t_new = lik(Mat2::identity() * new) + prior.log_prior_gamma_g2(new);
        if t_new == f64::NEG_INFINITY {
            return Ok(StepOutcome::Rejected);
        }
        let t_cur = lik(Mat2::identity() * cur) + prior.log_prior_gamma_g2(cur);
        if accept(t_new - t_cur + log_q_ratio, rng) {
            state.params.innov.gamma_g2 = new;
            Ok(StepOutcome::Accepted)
        } else {
            Ok(StepOutcome::Rejected)
        }
    }
}

/// Conditional mean and covariance of the pair residual at time `t` given
/// its neighbours at `t - 1` and `t + 1` in the stacked path.
///
/// * `T = 1`: `V = Sigma(0)`, `M = 0`.
/// * `t = 1`: `V = (Sigma(0)^-1 + Phi'G^-1 Phi)^-1`, `M = V Phi'G^-1 g_2`.
/// * `1 < t < T`: `V = (G^-1 + Phi'G^-1 Phi)^-1`, `M = V (G^-1 Phi g_{t-1} + Phi'G^-1 g_{t+1})`.
/// * `t = T`: `V = G`, `M = Phi g_{T-1}`.
pub fn imputation_conditional(process: &ArProcess, path: &[f64], t: usize) -> (Vec2, Mat2) {
    let tn = path.len() / 2;
    let at = |u: usize| Vec2::new(path[2 * u], path[2 * u + 1]);
    let phi = process.phi();
    let ginv = process.gamma().inverse();
    let pgp = phi.transpose() * ginv * phi;
    if tn == 1 {
        return (Vec2::zeros(), process.sigma0().matrix());
    }
    if t + 1 == tn {
        return (phi * at(t - 1), process.gamma().matrix());
    }
    let prec = if t == 0 {
        process.sigma0().inverse() + pgp
    } else {
        ginv + pgp
    };
    let v = symmetrize(prec.try_inverse().unwrap_or_else(Mat2::zeros));
    let mut h = phi.transpose() * ginv * at(t + 1);
    if t > 0 {
        h += ginv * phi * at(t - 1);
    }
    (v * h, v)
}

/// Draws one coordinate of a bivariate normal given the other.
pub(crate) fn conditional_1d(mean: Vec2, cov: &Mat2, k: usize, other: f64) -> (f64, f64) {
    let o = 1 - k;
    let m = mean[k] + cov[(k, o)] / cov[(o, o)] * (other - mean[o]);
    let v = cov[(k, k)] - cov[(k, o)] * cov[(k, o)] / cov[(o, o)];
    (m, v)
}

/// Step 7 (Gaussian): Gibbs imputation of missing responses, one pair-time
/// at a time. A pair with one observed direction is drawn conditionally on it.
pub fn update_missing<R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &Model,
    rng: &mut R,
) -> Result<StepOutcome> {
    let panel = model.panel;
    if panel.observed_count() == panel.actors() * panel.actors().saturating_sub(1) * panel.times() {
        return Ok(StepOutcome::Fixed);
    }
    let tn = panel.times();
    let process = gg_process(&state.params, model.family())?;
    let eta = linear_predictor(panel, &state.params.beta, state.params.beta_layout)?;
    let mut g = state.residuals_with(panel, &eta);
    let mut path = vec![0.0; 2 * tn];
    for (i, j) in panel.pairs() {
        let any_missing = (0..tn).any(|t| {
            !panel.is_observed(panel.cell(i, j, t)) || !panel.is_observed(panel.cell(j, i, t))
        });
        if !any_missing {
            continue;
        }
        for t in 0..tn {
            let c = [panel.cell(i, j, t), panel.cell(j, i, t)];
            let miss = [!panel.is_observed(c[0]), !panel.is_observed(c[1])];
            if !miss[0] && !miss[1] {
                continue;
            }
            for u in 0..tn {
                path[2 * u] = g[panel.cell(i, j, u)];
                path[2 * u + 1] = g[panel.cell(j, i, u)];
            }
            let (m, v) = imputation_conditional(&process, &path, t);
            if miss[0] && miss[1] {
                let draw = m + Spd2::new(v)?.mul_chol(Vec2::new(standard_normal(rng), standard_normal(rng)));
                g[c[0]] = draw[0];
                g[c[1]] = draw[1];
            } else {
                let k = if miss[0] { 0 } else { 1 };
                let (cm, cv) = conditional_1d(m, &v, k, g[c[1 - k]]);
                g[c[k]] = cm + libm::sqrt(cv.max(0.0)) * standard_normal(rng);
            }
            let sr = &state.params.sr;
            for k in 0..2 {
                if miss[k] {
                    let (s, r) = if k == 0 { (i, j) } else { (j, i) };
                    state.z[c[k]] = eta[c[k]] + sr.sender(s, t) + sr.receiver(r, t) + g[c[k]];
                }
            }
        }
    }
    Ok(StepOutcome::GibbsExact)
}
