use lsr_core::holdout::*;
use lsr_core::model::*;
use lsr_core::numerics::RngStream;
use lsr_core::posterior::{effective_sample_size, Scalar};
use lsr_core::prior::PriorHyper;
use lsr_core::sampler::{SamplerConfig, Submodel};
use lsr_core::simulate::*;

fn noise_panel(seed: u64) -> SimulatedPanel {
    let (a, t) = (10, 4);
    let mut truth = default_truth(a, t, vec![1.0, -0.7], Family::Gaussian);
    truth.ar = ArCoefficients::zero();
    truth.innov = InnovationCov { gamma_sr: lsr_core::Mat2::identity() * 1e-10, gamma_g2: 1.0, lambda_gg: 0.0 };
    let design = SimulationDesign {
        actors: a,
        times: t,
        covariate_names: covariate_names(2),
        covariates: CovariateGenerator::StandardNormal,
        truth,
        family: Family::Gaussian,
        missing_fraction: 0.0,
    };
    simulate_panel(&design, &mut RngStream::new(seed, 0)).unwrap()
}

fn ols(panel: &DyadPanel) -> [f64; 2] {
    let (mut xx, mut xy) = ([[0.0; 2]; 2], [0.0; 2]);
    for c in panel.observed_cells() {
        let (i, j, t) = panel.cell_coords(c);
        let x = panel.covariate_row(i, j, t);
        let y = panel.response_values()[c];
        for u in 0..2 {
            xy[u] += x[u] * y;
            for v in 0..2 {
                xx[u][v] += x[u] * x[v];
            }
        }
    }
    let det = xx[0][0] * xx[1][1] - xx[0][1] * xx[1][0];
    [
        (xx[1][1] * xy[0] - xx[0][1] * xy[1]) / det,
        (xx[0][0] * xy[1] - xx[1][0] * xy[0]) / det,
    ]
}

#[test]
fn independent_noise_model_reproduces_least_squares() {
    let sim = noise_panel(1);
    let sampler = SamplerConfig { total_scans: 4000, burn_in: 500, beta_layout: BetaLayout::Pooled, ..Default::default() };
    let cfg = FitConfig {
        prior: PriorHyper { beta_var: 1e8, ..PriorHyper::default() },
        ..FitConfig::new(Submodel::M5, sampler)
    };
    let chain = fit(&sim.panel, &cfg).unwrap();
    let want = ols(&sim.panel);
    for k in 0..2 {
        let v = chain.values(Scalar::Beta { t: 0, k }).unwrap();
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt();
        let mcse = sd / effective_sample_size(&v).unwrap().sqrt();
        assert!((m - want[k]).abs() < 3.0 * mcse, "beta {k}: {m} vs {} (mcse {mcse})", want[k]);
    }
}

#[test]
fn intercept_only_submodel_drops_covariates() {
    let sim = noise_panel(2);
    let design = design_panel(&sim.panel, Submodel::M2);
    assert_eq!(design.covariate_count(), 1);
    for c in design.observed_cells() {
        let (i, j, t) = design.cell_coords(c);
        assert_eq!(design.covariate_row(i, j, t), &[1.0]);
    }
    let sampler = SamplerConfig { total_scans: 20, burn_in: 0, beta_layout: BetaLayout::PerTime, ..Default::default() };
    let chain = fit(&sim.panel, &FitConfig::new(Submodel::M2, sampler)).unwrap();
    assert_eq!(chain.draws[0].params.beta.len(), sim.panel.times());
    assert_eq!(design_panel(&sim.panel, Submodel::M1).covariate_count(), 2);
}

#[test]
fn holdout_comparison_is_deterministic_and_shares_its_mask() {
    let sim = noise_panel(3);
    let sampler = SamplerConfig { total_scans: 60, burn_in: 20, beta_layout: BetaLayout::Pooled, ..Default::default() };
    let cfgs: Vec<FitConfig> = [Submodel::M1, Submodel::M4, Submodel::M5].iter().map(|&s| FitConfig::new(s, sampler.clone())).collect();
    let r1 = holdout_mse(&sim.panel, &cfgs, 0.25, &mut RngStream::new(4, 0)).unwrap();
    let r2 = holdout_mse(&sim.panel, &cfgs, 0.25, &mut RngStream::new(4, 0)).unwrap();
    assert_eq!(r1, r2);
    assert!(r1.iter().all(|r| r.held_out == 90 && r.mse.is_finite()));
}

#[test]
fn holdout_needs_a_gaussian_panel() {
    let design = SimulationDesign {
        actors: 4,
        times: 2,
        covariate_names: covariate_names(1),
        covariates: CovariateGenerator::Constant(vec![1.0]),
        truth: default_truth(4, 2, vec![0.0], Family::Binary),
        family: Family::Binary,
        missing_fraction: 0.0,
    };
    let sim = simulate_panel(&design, &mut RngStream::new(5, 0)).unwrap();
    let cfg = FitConfig::new(Submodel::M5, SamplerConfig::default());
    assert!(holdout_mse(&sim.panel, &[cfg], 0.25, &mut RngStream::new(1, 0)).is_err());
}
