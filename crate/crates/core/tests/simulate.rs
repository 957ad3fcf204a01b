use lsr_core::model::*;
use lsr_core::numerics::{Mat2, RngStream};
use lsr_core::simulate::*;

fn cell(a: usize, i: usize, j: usize, t: usize) -> usize {
    (t * a + i) * a + j
}

fn quiet_truth(a: usize, t: usize, family: Family) -> ModelParameters {
    let mut p = default_truth(a, t, vec![0.0], family);
    p.ar = ArCoefficients::zero();
    p.innov.gamma_sr = Mat2::identity() * 1e-12;
    p.innov.gamma_g2 = 1e-12;
    p.innov.lambda_gg = 0.0;
    p
}

#[test]
fn tiny_innovations_give_tiny_effects() {
    let p = quiet_truth(6, 4, Family::Gaussian);
    let (sr, g) = simulate_effects(&p.ar, &p.innov, 6, 4, &mut RngStream::new(1, 0)).unwrap();
    assert!(sr.values().iter().all(|v| v.abs() < 1e-4));
    assert!(g.iter().all(|v| v.abs() < 1e-4));
}

#[test]
fn sr_lag_covariances_match_closed_form() {
    let phi = Mat2::new(0.7, 0.2, -0.1, 0.5);
    let gamma = Mat2::new(1.0, 0.4, 0.4, 0.8);
    let ar = ArCoefficients { phi_sr: phi, phi_g: 0.0, phi_gg: 0.0 };
    let innov = InnovationCov { gamma_sr: gamma, ..InnovationCov::identity() };
    let blocks = stationary_blocks(&phi, &gamma, 3).unwrap();
    let mut rng = RngStream::new(2, 0);
    let n = 50_000;
    let mut acc = [[[0.0; 2]; 2]; 3];
    for _ in 0..n {
        let (sr, _) = simulate_effects(&ar, &innov, 2, 3, &mut rng).unwrap();
        for i in 0..2 {
            for d in 0..3 {
                let (x, y) = (sr.get(i, 0), sr.get(i, d));
                for u in 0..2 {
                    for v in 0..2 {
                        acc[d][u][v] += x[u] * y[v];
                    }
                }
            }
        }
    }
    for d in 0..3 {
        let exact = blocks.lag(d).unwrap();
        for u in 0..2 {
            for v in 0..2 {
                let emp = acc[d][u][v] / (2 * n) as f64;
                // relative 2% of the lag-0 scale keeps near-zero entries meaningful
                let scale = (exact[(u, u)].abs() * exact[(v, v)].abs()).sqrt().max(exact[(u, v)].abs());
                let scale = scale.max(blocks.lag(0).unwrap()[(u, u)]);
                assert!((emp - exact[(u, v)]).abs() < 0.02 * scale, "d={d} ({u},{v}): {emp} vs {}", exact[(u, v)]);
            }
        }
    }
}

#[test]
fn residual_paths_are_exchangeable() {
    let p = default_truth(2, 3, vec![0.0], Family::Gaussian);
    let mut rng = RngStream::new(3, 0);
    let n = 40_000;
    let (mut m_ij, mut m_ji, mut lag_ij, mut lag_ji) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let (_, g) = simulate_effects(&p.ar, &p.innov, 2, 3, &mut rng).unwrap();
        let (a0, b0) = (g[cell(2, 0, 1, 0)], g[cell(2, 1, 0, 0)]);
        let (a1, b1) = (g[cell(2, 0, 1, 1)], g[cell(2, 1, 0, 1)]);
        m_ij += a0 * a0;
        m_ji += b0 * b0;
        lag_ij += a0 * b1;
        lag_ji += b0 * a1;
    }
    let nf = n as f64;
    assert!((m_ij / nf - m_ji / nf).abs() < 0.05 * m_ij / nf);
    assert!((lag_ij / nf - lag_ji / nf).abs() < 0.05);
}

#[test]
fn zero_mean_and_tiny_variance_give_near_zero_response() {
    let design = SimulationDesign {
        actors: 4,
        times: 2,
        covariate_names: covariate_names(1),
        covariates: CovariateGenerator::Constant(vec![1.0]),
        truth: quiet_truth(4, 2, Family::Gaussian),
        family: Family::Gaussian,
        missing_fraction: 0.0,
    };
    let sim = simulate_panel(&design, &mut RngStream::new(4, 0)).unwrap();
    for c in sim.panel.observed_cells() {
        assert!(sim.panel.response_values()[c].abs() < 1e-4);
    }
}

#[test]
fn binary_with_null_predictor_is_a_fair_coin() {
    let mut truth = quiet_truth(10, 5, Family::Binary);
    // the residual scale is pinned by the probit constraint; only sr is quiet
    truth.rho_gg = Some(0.0);
    let design = SimulationDesign {
        actors: 10,
        times: 5,
        covariate_names: covariate_names(1),
        covariates: CovariateGenerator::Constant(vec![1.0]),
        truth,
        family: Family::Binary,
        missing_fraction: 0.0,
    };
    let mut rng = RngStream::new(5, 0);
    let (mut ones, mut n) = (0.0, 0.0);
    for _ in 0..100 {
        let sim = simulate_panel(&design, &mut rng).unwrap();
        for c in sim.panel.observed_cells() {
            let y = sim.panel.response_values()[c];
            assert!(y == 0.0 || y == 1.0);
            ones += y;
            n += 1.0;
        }
    }
    let freq = ones / n;
    assert!((freq - 0.5).abs() < 3.0 * (0.25 / n).sqrt() + 1e-3, "{freq}");
}

#[test]
fn missing_fraction_masks_exact_count() {
    let design = SimulationDesign {
        actors: 6,
        times: 3,
        covariate_names: covariate_names(2),
        covariates: CovariateGenerator::StandardNormal,
        truth: default_truth(6, 3, vec![1.0, -0.5], Family::Gaussian),
        family: Family::Gaussian,
        missing_fraction: 0.2,
    };
    let sim = simulate_panel(&design, &mut RngStream::new(6, 0)).unwrap();
    assert_eq!(sim.panel.missing_cells().len(), 18);
}

/// Every covariance cell of the observation model, at lags 0 and 1, against
/// replicate panels. Each replicate contributes one average per statistic so
/// the Monte-Carlo error is estimated from iid replicate means.
#[test]
fn replicate_covariances_match_derived_cells() {
    let (a, tn) = (5, 2);
    let mut truth = default_truth(a, tn, vec![0.0], Family::Gaussian);
    truth.ar.phi_sr = Mat2::new(0.6, 0.3, -0.2, 0.5);
    truth.innov.gamma_sr = Mat2::new(1.0, 0.3, 0.3, 0.7);
    truth.ar.phi_g = 0.5;
    truth.ar.phi_gg = 0.2;
    truth.innov.lambda_gg = 0.4;
    let design = SimulationDesign {
        actors: a,
        times: tn,
        covariate_names: covariate_names(1),
        covariates: CovariateGenerator::Constant(vec![1.0]),
        truth: truth.clone(),
        family: Family::Gaussian,
        missing_fraction: 0.0,
    };
    let sr_blocks = stationary_blocks(&truth.ar.phi_sr, &truth.innov.gamma_sr, tn).unwrap();
    let gg_blocks = stationary_blocks(&truth.ar.phi_gg_matrix(), &truth.innov.gamma_gg(), tn).unwrap();

    // (name, lag, expected, index pattern)
    type Pick = fn(usize, usize, usize, usize) -> ((usize, usize), (usize, usize));
    let cases: Vec<(&str, Pick, fn(&DerivedCovariances) -> f64)> = vec![
        ("same relation", |i, j, _, _| ((i, j), (i, j)), |c| c.same_relation()),
        ("reciprocal", |i, j, _, _| ((i, j), (j, i)), |c| c.reciprocal()),
        ("same sender", |i, j, k, _| ((i, j), (i, k)), |c| c.same_sender()),
        ("same receiver", |i, j, k, _| ((i, j), (k, j)), |c| c.same_receiver()),
        ("receiver then sender", |i, j, k, _| ((i, j), (j, k)), |c| c.receiver_then_sender()),
        ("sender then receiver", |i, j, k, _| ((j, k), (i, j)), |c| c.sender_then_receiver()),
        ("disjoint", |i, j, k, l| ((i, j), (k, l)), |_| 0.0),
    ];
    let reps = 20_000;
    let mut rng = RngStream::new(7, 0);
    let mut sums = vec![[(0.0f64, 0.0f64); 2]; cases.len()];
    for _ in 0..reps {
        let sim = simulate_panel(&design, &mut rng).unwrap();
        let y = sim.panel.response_values();
        for (ci, (_, pick, _)) in cases.iter().enumerate() {
            for d in 0..2 {
                let (mut s, mut n) = (0.0, 0.0);
                for i in 0..a {
                    for j in 0..a {
                        for k in 0..a {
                            for l in 0..a {
                                let distinct = [i, j, k, l];
                                let all_distinct = (0..4).all(|u| (u + 1..4).all(|v| distinct[u] != distinct[v]));
                                if !all_distinct {
                                    continue;
                                }
                                let ((u1, v1), (u2, v2)) = pick(i, j, k, l);
                                s += y[cell(a, u1, v1, 0)] * y[cell(a, u2, v2, d)];
                                n += 1.0;
                            }
                        }
                    }
                }
                let m = s / n;
                sums[ci][d].0 += m;
                sums[ci][d].1 += m * m;
            }
        }
    }
    let r = reps as f64;
    for (ci, (name, _, expected)) in cases.iter().enumerate() {
        for d in 0..2 {
            let cov = derived_covariances(&sr_blocks, &gg_blocks, d).unwrap();
            let want = expected(&cov);
            let (s, s2) = sums[ci][d];
            let mean = s / r;
            let se = ((s2 / r - mean * mean) / r).sqrt();
            assert!(
                (mean - want).abs() < 3.0 * se,
                "{name} lag {d}: empirical {mean:.4} vs {want:.4} (se {se:.4})"
            );
        }
    }
}
