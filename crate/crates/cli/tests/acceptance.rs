//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use lsr::chain_io;
use lsr::commands::predict;
use lsr::config::RunConfig;
use lsr::panel_io::{read_panel, write_panel};
use lsr_core::geweke::{compare, marginal_conditional, successive_conditional, GewekeSetup, MomentCheck};
use lsr_core::model::{
    probit_innovation_from, stationary_blocks, wong_inverse, wong_transform, ArProcess, BetaLayout, DyadPanel,
    Family, ModelParameters,
};
use lsr_core::numerics::{spectral_radius, standard_normal, Mat2, RngStream, Spd2, Vec2};
use lsr_core::posterior::{summarize, PosteriorChain, Scalar};
use lsr_core::prior::{default_diffuse, PriorHyper};
use lsr_core::sampler::{
    imputation_conditional, initial_state, run_chain, scan, ChainDraw, Model, SamplerConfig, Submodel,
};
use lsr_core::simulate::{covariate_names, default_truth, simulate_panel, CovariateGenerator, SimulationDesign};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_spd(rng: &mut RngStream) -> Mat2 {
    let l = Mat2::new(uniform(rng, 0.3, 1.5), 0.0, uniform(rng, -1.0, 1.0), uniform(rng, 0.3, 1.5));
    l * l.transpose()
}

fn random_stationary(rng: &mut RngStream) -> Mat2 {
    loop {
        let phi = Mat2::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        if spectral_radius(&phi) < 0.98 {
            return phi;
        }
    }
}

fn max_abs(m: &Mat2) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Yule-Walker fixed point on random pairs, then a long simulated chain.
fn criterion_1() -> Outcome {
    let mut rng = RngStream::new(101, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let phi = random_stationary(&mut rng);
        let gamma = random_spd(&mut rng);
        let blocks = stationary_blocks(&phi, &gamma, 6).unwrap();
        let s0 = blocks.lags[0];
        let scale = max_abs(&s0);
        worst = worst.max(max_abs(&(s0 - phi * s0 * phi.transpose() - gamma)) / scale);
        for d in 1..6 {
            // Sigma(d)' = Phi Sigma(d - 1)'
            let lhs = blocks.lags[d].transpose();
            let rhs = phi * blocks.lags[d - 1].transpose();
            worst = worst.max(max_abs(&(lhs - rhs)) / scale);
        }
    }
    let algebra_ok = worst < 1e-10;

    let phi = Mat2::new(0.8, 0.05, 0.1, 0.6);
    let gamma = Mat2::new(1.0, 0.5, 0.5, 1.0);
    let blocks = stationary_blocks(&phi, &gamma, 2).unwrap();
    let g = Spd2::new(gamma).unwrap();
    let s0 = Spd2::new(blocks.lags[0]).unwrap();
    let mut rng = RngStream::new(102, 0);
    let mut x = s0.mul_chol(Vec2::new(standard_normal(&mut rng), standard_normal(&mut rng)));
    let n = 1_000_000;
    let (mut c0, mut c1) = (Mat2::zeros(), Mat2::zeros());
    for _ in 0..n {
        let next = phi * x + g.mul_chol(Vec2::new(standard_normal(&mut rng), standard_normal(&mut rng)));
        c0 += x * x.transpose();
        c1 += x * next.transpose();
        x = next;
    }
    c0 /= n as f64;
    c1 /= n as f64;
    let mut rel: f64 = 0.0;
    for (est, truth) in [(c0, blocks.lags[0]), (c1, blocks.lags[1])] {
        for (e, t) in est.iter().zip(truth.iter()) {
            rel = rel.max((e - t).abs() / t.abs());
        }
    }
    outcome(
        algebra_ok && rel < 0.02,
        format!("Yule-Walker residual {worst:.1e} over 100 pairs; 1e6-step chain max relative error {:.2}%", rel * 100.0),
    )
}

/// Unit diagonal of the probit residual covariance.
fn criterion_2() -> Outcome {
    let mut rng = RngStream::new(201, 0);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let phi_g = uniform(&mut rng, -1.0, 1.0);
        let phi_gg = uniform(&mut rng, -1.0, 1.0);
        if phi_g.abs() + phi_gg.abs() >= 0.99 {
            continue;
        }
        let rho = uniform(&mut rng, -0.99, 0.99);
        let inn = probit_innovation_from(phi_g, phi_gg, rho);
        assert!(inn.positive_definite);
        let phi = Mat2::new(phi_g, phi_gg, phi_gg, phi_g);
        let s0 = stationary_blocks(&phi, &inn.matrix(), 1).unwrap().lags[0];
        worst = worst.max((s0[(0, 0)] - 1.0).abs()).max((s0[(1, 1)] - 1.0).abs()).max((s0[(0, 1)] - rho).abs());
        n += 1;
    }
    outcome(worst < 1e-10, format!("max |diag - 1| (and |offdiag - rho|) {worst:.1e} over 1000 triples"))
}

fn geweke_prior(family: Family, n_beta: usize) -> lsr_core::PriorSpec {
    PriorHyper {
        beta_mean: 0.0,
        beta_var: 1.0,
        phi_mean: 0.0,
        phi_var: 0.1,
        v_sr: 20.0,
        s_sr_scale: 17.0,
        alpha_a: 6.0,
        delta_a: 5.0,
        alpha_b: 6.0,
        delta_b: 5.0,
        rho_mean: 0.0,
        rho_var: 0.25,
    }
    .build(family, n_beta)
    .unwrap()
}

/// Marginal-conditional versus successive-conditional simulation.
fn criterion_3() -> Outcome {
    let (a, t, n) = (4, 3, 50_000);
    let mut detail = Vec::new();
    let mut pass = true;
    for (k, family) in [Family::Gaussian, Family::Binary].into_iter().enumerate() {
        let config = SamplerConfig { beta_layout: BetaLayout::PerTime, ..Default::default() };
        let setup = GewekeSetup::intercept_only(a, t, family, geweke_prior(family, t), config);
        let scalars = setup.scalars().unwrap();
        let seed = 301 + k as u64;
        let m = marginal_conditional(&setup, &scalars, n, &mut RngStream::new(seed, 0)).unwrap();
        let s = successive_conditional(&setup, &scalars, n, &mut RngStream::new(seed, 1)).unwrap();
        let checks = compare(&scalars, &m, &s, 50);
        for c in &checks {
            println!("    {:<9} {:<10} moment {} prior {:>9.4} sampler {:>9.4} z {:>6.2}", family.as_str(), c.name, c.moment, c.marginal, c.successive, c.z);
        }
        let worst: &MomentCheck = checks.iter().max_by(|x, y| x.z.abs().total_cmp(&y.z.abs())).unwrap();
        pass &= worst.z.abs() < 3.0;
        detail.push(format!("{}: {} scalars, worst |z| {:.2} ({} moment {})", family.as_str(), scalars.len(), worst.z.abs(), worst.name, worst.moment));
    }
    outcome(pass, format!("{n} replicates each; {}", detail.join("; ")))
}

/// Solves the Gaussian innovation correlation that gives a lag-zero residual
/// correlation `rho` under the AR coefficients `(phi_g, phi_gg)`.
fn lambda_for_rho(phi_g: f64, phi_gg: f64, rho: f64) -> f64 {
    let ka = 1.0 / (1.0 - (phi_g + phi_gg).powi(2));
    let kb = 1.0 / (1.0 - (phi_g - phi_gg).powi(2));
    let r = (1.0 + rho) / (1.0 - rho) * kb / ka;
    (r - 1.0) / (r + 1.0)
}

fn design(family: Family, a: usize, t: usize, truth: ModelParameters, missing: f64) -> SimulationDesign {
    SimulationDesign {
        actors: a,
        times: t,
        covariate_names: covariate_names(2),
        covariates: CovariateGenerator::StandardNormal,
        truth,
        family,
        missing_fraction: missing,
    }
}

fn gaussian_truth(a: usize, t: usize) -> ModelParameters {
    let mut truth = default_truth(a, t, vec![1.0, 0.5], Family::Gaussian);
    truth.innov.lambda_gg = lambda_for_rho(truth.ar.phi_g, truth.ar.phi_gg, 0.32);
    truth
}

/// Per-scalar count of replicates whose 95% interval covers the truth.
struct Coverage {
    names: Vec<String>,
    hits: Vec<usize>,
    reps: usize,
}

impl Coverage {
    fn new(scalars: &[Scalar]) -> Self {
        Self { names: scalars.iter().map(|s| s.to_string()).collect(), hits: vec![0; scalars.len()], reps: 0 }
    }

    fn add(&mut self, chain: &PosteriorChain, scalars: &[Scalar], truth: &ModelParameters) {
        let rows = summarize(chain, scalars).unwrap();
        for (k, (s, row)) in scalars.iter().zip(&rows).enumerate() {
            let v = s.value(truth).unwrap();
            self.hits[k] += usize::from(row.q025 <= v && v <= row.q975);
        }
        self.reps += 1;
    }

    fn line(&self) -> String {
        self.names.iter().zip(&self.hits).map(|(n, h)| format!("{n} {h}/{}", self.reps)).collect::<Vec<_>>().join(", ")
    }

    fn min(&self) -> usize {
        self.hits.iter().copied().min().unwrap_or(0)
    }
}

/// Gaussian recovery at A = 20, T = 10, two covariates.
fn criterion_4() -> Outcome {
    let (a, t) = (20, 10);
    let truth = gaussian_truth(a, t);
    let rho = Scalar::RhoGg.value(&truth).unwrap();
    assert!((rho - 0.32).abs() < 1e-12, "{rho}");
    let scalars = Scalar::parameters(&truth);
    let mut cov = Coverage::new(&scalars);
    let prior = default_diffuse(Family::Gaussian, 2);
    for rep in 0..20u64 {
        let sim = simulate_panel(&design(Family::Gaussian, a, t, truth.clone(), 0.0), &mut RngStream::new(400 + rep, 0)).unwrap();
        let config = SamplerConfig { total_scans: 40_000, burn_in: 5_000, thin: 5, seed: 450 + rep, beta_layout: BetaLayout::Pooled, ..Default::default() };
        let chain = run_chain(&sim.panel, &prior, &config).unwrap();
        cov.add(&chain, &scalars, &sim.truth);
    }
    println!("    coverage: {}", cov.line());
    outcome(cov.min() >= 17, format!("every scalar covered in >= {}/20 replicates (need 17)", cov.min()))
}

/// Probit recovery at A = 15, T = 8 with rho_gg = 0.68, checking the latent
/// signs after every scan.
fn criterion_5() -> Outcome {
    let (a, t) = (15, 8);
    let truth = default_truth(a, t, vec![-0.3, 0.5], Family::Binary);
    let scalars: Vec<Scalar> = Scalar::parameters(&truth)
        .into_iter()
        .filter(|s| !matches!(s, Scalar::Gamma2G | Scalar::LambdaGg))
        .collect();
    let rho_idx = scalars.iter().position(|s| *s == Scalar::RhoGg).unwrap();
    let mut cov = Coverage::new(&scalars);
    let prior = default_diffuse(Family::Binary, 2);
    let (mut scans, mut bad_scans) = (0usize, 0usize);
    for rep in 0..20u64 {
        let sim = simulate_panel(&design(Family::Binary, a, t, truth.clone(), 0.0), &mut RngStream::new(500 + rep, 0)).unwrap();
        let panel = &sim.panel;
        let config = SamplerConfig { total_scans: 60_000, burn_in: 10_000, thin: 10, seed: 550 + rep, beta_layout: BetaLayout::Pooled, ..Default::default() };
        // the loop of run_chain, with the latent signs checked after every scan
        let model = Model { panel, prior: &prior, structure: config.structure };
        let mut state = initial_state(panel, &config.structure, config.beta_layout);
        let mut rng = RngStream::new(config.seed, 0);
        let observed = panel.observed_cells();
        let y = panel.response_values();
        let mut draws = Vec::new();
        for s in 1..=config.total_scans {
            let flags = scan(&mut state, &model, &config, &mut rng).unwrap();
            scans += 1;
            let ok = observed.iter().all(|&c| if y[c] == 1.0 { state.z[c] > 0.0 } else { state.z[c] < 0.0 });
            bad_scans += usize::from(!ok);
            if s > config.burn_in && (s - config.burn_in) % config.thin == 0 {
                draws.push(ChainDraw { scan: s, params: state.params.clone(), imputed: Vec::new(), latent: None, flags });
            }
        }
        if rep == 0 {
            // the loop above mirrors run_chain draw for draw
            let short = SamplerConfig { total_scans: 200, burn_in: 0, thin: 1, ..config.clone() };
            let reference = run_chain(panel, &prior, &short).unwrap();
            assert_eq!(reference.draws[199].params, replay(panel, &prior, &short, 200));
        }
        let mut meta = run_chain(panel, &prior, &SamplerConfig { total_scans: 0, burn_in: 0, ..config.clone() }).unwrap().meta;
        meta.config = config;
        let chain = PosteriorChain { draws, meta };
        cov.add(&chain, &scalars, &sim.truth);
    }
    println!("    coverage: {}", cov.line());
    let rho_hits = cov.hits[rho_idx];
    outcome(
        rho_hits >= 17 && bad_scans == 0,
        format!("rho_gg covered in {rho_hits}/20 replicates (need 17); latent signs wrong in {bad_scans} of {scans} scans"),
    )
}

/// Parameters after `n` scans of the manual loop, for comparison with `run_chain`.
fn replay(panel: &DyadPanel, prior: &lsr_core::PriorSpec, config: &SamplerConfig, n: usize) -> ModelParameters {
    let model = Model { panel, prior, structure: config.structure };
    let mut state = initial_state(panel, &config.structure, config.beta_layout);
    let mut rng = RngStream::new(config.seed, 0);
    for _ in 0..n {
        scan(&mut state, &model, config, &mut rng).unwrap();
    }
    state.params
}

/// Holdout MSE ordering of the full model against the scalar AR(1) and
/// independent-noise submodels.
fn criterion_6() -> Outcome {
    let (a, t) = (20, 10);
    let truth = gaussian_truth(a, t);
    let mut wins = 0;
    let mut lines = Vec::new();
    for rep in 0..10u64 {
        let sim = simulate_panel(&design(Family::Gaussian, a, t, truth.clone(), 0.0), &mut RngStream::new(600 + rep, 0)).unwrap();
        let mut config = RunConfig {
            beta_layout: BetaLayout::Pooled,
            holdout_fraction: 0.25,
            models: vec![Submodel::M1, Submodel::M4, Submodel::M5],
            ..RunConfig::default()
        };
        config.sampler.total_scans = 12_000;
        config.sampler.burn_in = 2_000;
        config.sampler.thin = 2;
        config.sampler.seed = 650 + rep;
        let rows = predict(&config, &sim.panel).unwrap();
        let (m1, m4, m5) = (rows[0].mse, rows[1].mse, rows[2].mse);
        let ordered = m1 < m4 && m4 < m5;
        wins += usize::from(ordered);
        lines.push(format!("{m1:.3}/{m4:.3}/{m5:.3}{}", if ordered { "" } else { " (out of order)" }));
    }
    println!("    MSE M1/M4/M5 per seed: {}", lines.join(", "));
    outcome(wins >= 8, format!("M1 < M4 < M5 in {wins}/10 seeds (need 8)"))
}

/// Conditional mean and covariance of block `t` given every other block of
/// the dense stationary covariance.
fn dense_conditional(process: &ArProcess, path: &[f64], t: usize) -> (Vec2, Mat2) {
    let tn = path.len() / 2;
    let sigma = stationary_blocks(&process.phi(), &process.gamma().matrix(), tn).unwrap().assembled;
    let keep: Vec<usize> = (0..2 * tn).filter(|&k| k / 2 != t).collect();
    let own = [2 * t, 2 * t + 1];
    let s_oo = sigma.select_rows(&own).select_columns(&own);
    if keep.is_empty() {
        return (Vec2::zeros(), Mat2::new(s_oo[(0, 0)], s_oo[(0, 1)], s_oo[(1, 0)], s_oo[(1, 1)]));
    }
    let s_ok = sigma.select_rows(&own).select_columns(&keep);
    let s_kk = sigma.select_rows(&keep).select_columns(&keep);
    let x = DMatrix::from_iterator(keep.len(), 1, keep.iter().map(|&k| path[k]));
    let chol = s_kk.cholesky().unwrap();
    let mean = &s_ok * chol.solve(&x);
    let cov = &s_oo - &s_ok * chol.solve(&s_ok.transpose());
    (Vec2::new(mean[0], mean[1]), Mat2::new(cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]))
}

fn criterion_7() -> Outcome {
    let mut rng = RngStream::new(701, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for draw in 0..200 {
        let tn = if draw % 10 == 0 { 1 } else { 2 + draw % 6 };
        let (phi_g, phi_gg) = loop {
            let (x, y) = (uniform(&mut rng, -0.95, 0.95), uniform(&mut rng, -0.95, 0.95));
            if x.abs() + y.abs() < 0.95 {
                break (x, y);
            }
        };
        let g2 = uniform(&mut rng, 0.2, 3.0);
        let lambda = uniform(&mut rng, -0.9, 0.9);
        let process = ArProcess::new(Mat2::new(phi_g, phi_gg, phi_gg, phi_g), Mat2::new(g2, g2 * lambda, g2 * lambda, g2)).unwrap();
        let path: Vec<f64> = (0..2 * tn).map(|_| 2.0 * standard_normal(&mut rng)).collect();
        let mut times = vec![0, tn - 1];
        if tn > 2 {
            times.push(1 + draw % (tn - 2));
        }
        for t in times {
            let (m, v) = imputation_conditional(&process, &path, t);
            let (dm, dv) = dense_conditional(&process, &path, t);
            worst = worst.max(max_abs(&(v - dv))).max((m - dm).abs().max());
            cases += 1;
        }
    }
    outcome(worst < 1e-10, format!("max deviation from dense conditioning {worst:.1e} over {cases} (draw, t) cases"))
}

fn small_chain(family: Family, seed: u64) -> (DyadPanel, PosteriorChain) {
    let sim = simulate_panel(&design(family, 6, 4, default_truth(6, 4, vec![0.3, -0.2], family), 0.15), &mut RngStream::new(seed, 0)).unwrap();
    let config = SamplerConfig { total_scans: 400, burn_in: 100, seed, store_latent: true, ..Default::default() };
    let chain = run_chain(&sim.panel, &default_diffuse(family, 8), &config).unwrap();
    (sim.panel, chain)
}

fn criterion_8() -> Outcome {
    let mut checks = Vec::new();
    for family in [Family::Gaussian, Family::Binary] {
        let (panel, c1) = small_chain(family, 801);
        let (_, c2) = small_chain(family, 801);
        let same = c1 == c2 && chain_io::to_binary(&c1) == chain_io::to_binary(&c2);
        let text_ok = chain_io::from_text(&chain_io::to_text(&c1)).unwrap() == c1;
        let emitted = write_panel(&panel);
        let back = read_panel(emitted.as_bytes(), family).unwrap();
        let panel_ok = back == panel && write_panel(&back) == emitted;
        checks.push((format!("{} chain bit-identical", family.as_str()), same));
        checks.push((format!("{} chain text round trip", family.as_str()), text_ok));
        checks.push((format!("{} panel round trip", family.as_str()), panel_ok));
    }
    let mut rng = RngStream::new(802, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (sa, sb) = (uniform(&mut rng, -5.0, 5.0).exp(), uniform(&mut rng, -5.0, 5.0).exp());
        let (g2, lambda) = wong_transform(sa, sb).unwrap();
        let (ra, rb) = wong_inverse(g2, lambda).unwrap();
        // errors relative to the matrix scale: when one variance is tiny the
        // correlation is near -1 or 1 and the small variance inherits the
        // rounding of the large one
        let scale = sa + sb;
        worst = worst.max((ra - sa).abs() / scale).max((rb - sb).abs() / scale);
        let (ra2, rb2) = wong_inverse(g2, lambda).unwrap();
        let (g2b, lambdab) = wong_transform(ra2, rb2).unwrap();
        worst = worst.max((g2b - g2).abs() / g2).max((lambdab - lambda).abs());
    }
    checks.push((format!("Wong round trips max error {worst:.1e}"), worst < 1e-12));
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect();
    outcome(failed.is_empty(), if failed.is_empty() { checks.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join("; ") } else { format!("failed: {}", failed.join("; ")) })
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("covariance algebra", criterion_1),
        ("probit identifiability", criterion_2),
        ("sampler exactness", criterion_3),
        ("gaussian recovery", criterion_4),
        ("probit recovery", criterion_5),
        ("holdout ordering", criterion_6),
        ("missing-data imputation", criterion_7),
        ("determinism and round trips", criterion_8),
    ];
    let only: Option<usize> = std::env::var("LSR_ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        all &= o.pass;
        println!(
            "{} criterion {} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
