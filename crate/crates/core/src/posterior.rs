//! Posterior chain storage, summaries and diagnostics.

use core::fmt;
use core::str::FromStr;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{BetaLayout, Family, ModelParameters};
use crate::numerics::{solve_discrete_lyapunov, Mat2};
use crate::sampler::{ChainDraw, SamplerConfig, ScanFlags, StepOutcome};

/// Per-step outcome counts over all scans.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AcceptanceSummary {
    /// `counts[step][outcome]` with steps in [`ScanFlags::STEP_NAMES`] order
    /// and outcomes `(accepted, rejected, gibbs-exact, fixed)`.
    pub counts: [[usize; 4]; 9],
}

impl AcceptanceSummary {
    pub fn record(&mut self, flags: &ScanFlags) {
        for (k, o) in flags.as_array().into_iter().enumerate() {
            let idx = match o {
                StepOutcome::Accepted => 0,
                StepOutcome::Rejected => 1,
                StepOutcome::GibbsExact => 2,
                StepOutcome::Fixed => 3,
            };
            self.counts[k][idx] += 1;
        }
    }

    /// Accepted fraction of the MH proposals of a step, `None` if it never ran as MH.
    pub fn rate(&self, step: usize) -> Option<f64> {
        let [a, r, _, _] = self.counts[step];
        (a + r > 0).then(|| a as f64 / (a + r) as f64)
    }
}

/// Run metadata stored with the draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMeta {
    pub config: SamplerConfig,
    pub family: Family,
    pub fingerprint: u64,
    pub labels: Vec<String>,
    pub covariate_names: Vec<String>,
    pub times: usize,
    /// Cells whose working response is recorded in every draw's `imputed`.
    pub missing_cells: Vec<usize>,
    pub acceptance: AcceptanceSummary,
}

impl ChainMeta {
    pub fn actors(&self) -> usize {
        self.labels.len()
    }

    pub fn covariates(&self) -> usize {
        self.covariate_names.len()
    }
}

/// Post burn-in, thinned draws.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    pub draws: Vec<ChainDraw>,
    pub meta: ChainMeta,
}

/// Lag-zero covariance quantities derived from `(Phi, Gamma)` through the
/// stationary covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedField {
    Sigma2S,
    SigmaSr,
    RhoSr,
    Sigma2R,
    Sigma2G,
    SigmaGg,
    RhoGg,
}

impl DerivedField {
    pub const ALL: [DerivedField; 7] = [
        DerivedField::Sigma2S,
        DerivedField::SigmaSr,
        DerivedField::RhoSr,
        DerivedField::Sigma2R,
        DerivedField::Sigma2G,
        DerivedField::SigmaGg,
        DerivedField::RhoGg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DerivedField::Sigma2S => "sigma2_s",
            DerivedField::SigmaSr => "sigma_sr",
            DerivedField::RhoSr => "rho_sr",
            DerivedField::Sigma2R => "sigma2_r",
            DerivedField::Sigma2G => "sigma2_g",
            DerivedField::SigmaGg => "sigma_gg",
            DerivedField::RhoGg => "rho_gg0",
        }
    }
}

/// A scalar function of one draw. Indices are 0-based; names are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar {
    /// `beta_{t,k}`; `t` is 0 for a pooled layout.
    Beta { t: usize, k: usize },
    PhiS,
    PhiSr,
    PhiRs,
    PhiR,
    PhiG,
    PhiGg,
    Gamma2S,
    GammaSr,
    Gamma2R,
    Gamma2G,
    LambdaGg,
    /// The residual correlation: the parameter for the binary family, the
    /// derived lag-zero correlation otherwise.
    RhoGg,
    Sender { i: usize, t: usize },
    Receiver { i: usize, t: usize },
    Derived(DerivedField),
}

const NAMED: [(&str, Scalar); 12] = [
    ("phi_s", Scalar::PhiS),
    ("phi_sr", Scalar::PhiSr),
    ("phi_rs", Scalar::PhiRs),
    ("phi_r", Scalar::PhiR),
    ("phi_g", Scalar::PhiG),
    ("phi_gg", Scalar::PhiGg),
    ("gamma2_s", Scalar::Gamma2S),
    ("gamma_sr", Scalar::GammaSr),
    ("gamma2_r", Scalar::Gamma2R),
    ("gamma2_g", Scalar::Gamma2G),
    ("lambda_gg", Scalar::LambdaGg),
    ("rho_gg", Scalar::RhoGg),
];

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Scalar::Beta { t, k } => write!(f, "beta[{},{}]", t + 1, k + 1),
            Scalar::Sender { i, t } => write!(f, "s[{},{}]", i + 1, t + 1),
            Scalar::Receiver { i, t } => write!(f, "r[{},{}]", i + 1, t + 1),
            Scalar::Derived(d) => f.write_str(d.name()),
            other => {
                let name = NAMED.iter().find(|(_, s)| *s == other).map(|(n, _)| *n);
                f.write_str(name.unwrap_or("?"))
            }
        }
    }
}

fn parse_pair(s: &str, prefix: &str) -> Option<(usize, usize)> {
    let inner = s.strip_prefix(prefix)?.strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = inner.split_once(',')?;
    let a: usize = a.trim().parse().ok()?;
    let b: usize = b.trim().parse().ok()?;
    (a >= 1 && b >= 1).then(|| (a - 1, b - 1))
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((_, sc)) = NAMED.iter().find(|(n, _)| *n == s) {
            return Ok(*sc);
        }
        if let Some(d) = DerivedField::ALL.iter().find(|d| d.name() == s) {
            return Ok(Scalar::Derived(*d));
        }
        if let Some((t, k)) = parse_pair(s, "beta") {
            return Ok(Scalar::Beta { t, k });
        }
        if let Some((i, t)) = parse_pair(s, "s") {
            return Ok(Scalar::Sender { i, t });
        }
        if let Some((i, t)) = parse_pair(s, "r") {
            return Ok(Scalar::Receiver { i, t });
        }
        Err(Error::UnknownScalar(s.to_string()))
    }
}

impl Scalar {
    /// Every model parameter scalar (no random effects, no derived values).
    pub fn parameters(params: &ModelParameters) -> Vec<Scalar> {
        let tb = match params.beta_layout {
            BetaLayout::PerTime => params.times(),
            BetaLayout::Pooled => 1,
        };
        let mut out = Vec::new();
        for t in 0..tb {
            for k in 0..params.covariates {
                out.push(Scalar::Beta { t, k });
            }
        }
        out.extend(NAMED.iter().map(|(_, s)| *s));
        out
    }

    pub fn random_effects(actors: usize, times: usize) -> Vec<Scalar> {
        let mut out = Vec::new();
        for i in 0..actors {
            for t in 0..times {
                out.push(Scalar::Sender { i, t });
                out.push(Scalar::Receiver { i, t });
            }
        }
        out
    }

    pub fn value(&self, p: &ModelParameters) -> Result<f64> {
        let out_of_range = || Error::UnknownScalar(self.to_string());
        Ok(match *self {
            Scalar::Beta { t, k } => {
                let pooled = p.beta_layout == BetaLayout::Pooled;
                if k >= p.covariates || t >= p.times() || (pooled && t > 0) {
                    return Err(out_of_range());
                }
                p.beta_t(t)[k]
            }
            Scalar::PhiS => p.ar.phi_sr[(0, 0)],
            Scalar::PhiSr => p.ar.phi_sr[(0, 1)],
            Scalar::PhiRs => p.ar.phi_sr[(1, 0)],
            Scalar::PhiR => p.ar.phi_sr[(1, 1)],
            Scalar::PhiG => p.ar.phi_g,
            Scalar::PhiGg => p.ar.phi_gg,
            Scalar::Gamma2S => p.innov.gamma_sr[(0, 0)],
            Scalar::GammaSr => p.innov.gamma_sr[(0, 1)],
            Scalar::Gamma2R => p.innov.gamma_sr[(1, 1)],
            Scalar::Gamma2G => p.innov.gamma_g2,
            Scalar::LambdaGg => p.innov.lambda_gg,
            Scalar::RhoGg => match p.rho_gg {
                Some(r) => r,
                None => derived_value(p, DerivedField::RhoGg)?,
            },
            Scalar::Sender { i, t } => {
                if i >= p.actors() || t >= p.times() {
                    return Err(out_of_range());
                }
                p.sr.sender(i, t)
            }
            Scalar::Receiver { i, t } => {
                if i >= p.actors() || t >= p.times() {
                    return Err(out_of_range());
                }
                p.sr.receiver(i, t)
            }
            Scalar::Derived(d) => derived_value(p, d)?,
        })
    }
}

/// `(Sigma_sr(0), Sigma_gg(0))` of one parameter draw.
pub fn lag_zero_covariances(p: &ModelParameters) -> Result<(Mat2, Mat2)> {
    let sr = solve_discrete_lyapunov(&p.ar.phi_sr, &p.innov.gamma_sr)?;
    let gg = solve_discrete_lyapunov(&p.ar.phi_gg_matrix(), &p.innov.gamma_gg())?;
    Ok((sr, gg))
}

fn derived_value(p: &ModelParameters, d: DerivedField) -> Result<f64> {
    let (sr, gg) = lag_zero_covariances(p)?;
    Ok(match d {
        DerivedField::Sigma2S => sr[(0, 0)],
        DerivedField::SigmaSr => sr[(0, 1)],
        DerivedField::RhoSr => sr[(0, 1)] / libm::sqrt(sr[(0, 0)] * sr[(1, 1)]),
        DerivedField::Sigma2R => sr[(1, 1)],
        DerivedField::Sigma2G => gg[(0, 0)],
        DerivedField::SigmaGg => gg[(0, 1)],
        DerivedField::RhoGg => gg[(0, 1)] / gg[(0, 0)],
    })
}

/// Quantiles and moments of one scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSummary {
    pub name: String,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Linear interpolation between order statistics (`h = (n - 1) p`) of an
/// ascending slice.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

pub fn summarize_values(name: &str, values: &[f64]) -> Result<ScalarSummary> {
    if values.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = if s.len() > 1 {
        s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(ScalarSummary {
        name: name.to_string(),
        q025: quantile_sorted(&s, 0.025),
        median: quantile_sorted(&s, 0.5),
        q975: quantile_sorted(&s, 0.975),
        mean,
        sd: libm::sqrt(var),
    })
}

impl PosteriorChain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn values(&self, scalar: Scalar) -> Result<Vec<f64>> {
        self.draws.iter().map(|d| scalar.value(&d.params)).collect()
    }
}

/// `(2.5%, median, 97.5%)` of each selected scalar.
pub fn summarize(chain: &PosteriorChain, selectors: &[Scalar]) -> Result<Vec<ScalarSummary>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    selectors
        .iter()
        .map(|s| summarize_values(&s.to_string(), &chain.values(*s)?))
        .collect()
}

/// Posterior of the lag-zero covariance quantities.
pub fn derived_posterior(chain: &PosteriorChain) -> Result<Vec<ScalarSummary>> {
    let sel: Vec<Scalar> = DerivedField::ALL.iter().map(|d| Scalar::Derived(*d)).collect();
    summarize(chain, &sel)
}

/// Effective sample size by Geyer's initial positive sequence. A constant
/// series has ESS 1; the estimate is capped at the series length.
pub fn effective_sample_size(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 10 {
        return Err(Error::ChainTooShort { len: n, min: 10 });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let autocov = |k: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..n - k {
            s += (values[t] - mean) * (values[t + k] - mean);
        }
        s / n as f64
    };
    let g0 = autocov(0);
    if !(g0 > 0.0) {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = autocov(2 * m) + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    let tau = (2.0 * sum - g0) / g0;
    Ok((n as f64 / tau.max(1e-12)).min(n as f64))
}

/// ESS of one scalar of a chain.
pub fn chain_ess(chain: &PosteriorChain, scalar: Scalar) -> Result<f64> {
    effective_sample_size(&chain.values(scalar)?)
}

/// `(scan index, value)` series of one scalar.
pub fn trace_export(chain: &PosteriorChain, scalar: Scalar) -> Result<Vec<(usize, f64)>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    chain
        .draws
        .iter()
        .map(|d| Ok((d.scan, scalar.value(&d.params)?)))
        .collect()
}

/// Across-draw median of each missing cell's imputed value, as `(cell, median)`.
pub fn median_imputations(chain: &PosteriorChain) -> Result<Vec<(usize, f64)>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut col = Vec::with_capacity(chain.len());
    Ok(chain
        .meta
        .missing_cells
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            col.clear();
            col.extend(chain.draws.iter().map(|d| d.imputed[k]));
            col.sort_by(|a, b| a.total_cmp(b));
            (c, quantile_sorted(&col, 0.5))
        })
        .collect())
}

/// Formats a trace series as `scan,value` lines with a header. Values are
/// printed with round-trip precision.
pub fn format_trace(name: &str, series: &[(usize, f64)]) -> String {
    let mut s = format!("scan,{name}\n");
    for (k, v) in series {
        s.push_str(&format!("{k},{v:?}\n"));
    }
    s
}

/// Inverse of [`format_trace`].
pub fn parse_trace(text: &str) -> Result<(String, Vec<(usize, f64)>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::EmptyChain)?;
    let name = header
        .strip_prefix("scan,")
        .ok_or_else(|| Error::ConfigInvalid(format!("bad trace header {header:?}")))?;
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let bad = || Error::ConfigInvalid(format!("bad trace line {}: {line:?}", n + 2));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        out.push((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
    }
    Ok((name.to_string(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArCoefficients, InnovationCov, SrEffects};
    use crate::numerics::RngStream;
    use crate::sampler::ScanFlags;
    use alloc::vec;
    use rand_distr::{Distribution, StandardNormal};

    fn params(phi: f64, g2: f64) -> ModelParameters {
        ModelParameters {
            beta: vec![1.0, 2.0],
            beta_layout: BetaLayout::Pooled,
            covariates: 2,
            ar: ArCoefficients {
                phi_sr: Mat2::identity() * phi,
                phi_g: phi,
                phi_gg: 0.0,
            },
            innov: InnovationCov {
                gamma_sr: Mat2::new(2.0, 0.5, 0.5, 1.0),
                gamma_g2: g2,
                lambda_gg: 0.3,
            },
            rho_gg: None,
            sr: SrEffects::zeros(2, 1),
        }
    }

    fn chain(ps: Vec<ModelParameters>) -> PosteriorChain {
        let flags = ScanFlags {
            beta: StepOutcome::GibbsExact,
            sr: StepOutcome::GibbsExact,
            phi_sr: StepOutcome::Accepted,
            phi_gg: StepOutcome::Accepted,
            gamma_sr: StepOutcome::Accepted,
            gamma_gg: StepOutcome::Accepted,
            missing: StepOutcome::Fixed,
            theta: StepOutcome::Fixed,
            rho_gg: StepOutcome::Fixed,
        };
        PosteriorChain {
            draws: ps
                .into_iter()
                .enumerate()
                .map(|(k, params)| ChainDraw {
                    scan: k + 1,
                    params,
                    imputed: Vec::new(),
                    latent: None,
                    flags,
                })
                .collect(),
            meta: ChainMeta {
                config: SamplerConfig::default(),
                family: Family::Gaussian,
                fingerprint: 0,
                labels: vec!["a".into(), "b".into()],
                covariate_names: vec!["x1".into(), "x2".into()],
                times: 1,
                missing_cells: Vec::new(),
                acceptance: AcceptanceSummary::default(),
            },
        }
    }

    #[test]
    fn quantiles_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = summarize_values("x", &v).unwrap();
        assert!((s.q025 - 3.475).abs() < 1e-12);
        assert_eq!(s.median, 50.5);
        assert!((s.q975 - 97.525).abs() < 1e-12);
        // sorted-array oracle: positions 0.025 * 99 and 0.975 * 99
        let oracle = |h: f64| v[h as usize] + (h - h.floor()) * (v[h as usize + 1] - v[h as usize]);
        assert!((s.q025 - oracle(2.475)).abs() < 1e-12);
        assert!((s.q975 - oracle(96.525)).abs() < 1e-12);
    }

    #[test]
    fn constant_and_two_point_chains() {
        let s = summarize_values("c", &[4.2; 17]).unwrap();
        assert_eq!((s.q025, s.median, s.q975), (4.2, 4.2, 4.2));
        assert_eq!(summarize_values("d", &[-3.0, 3.0]).unwrap().median, 0.0);
        assert_eq!(summarize_values("e", &[]), Err(Error::EmptyChain));
    }

    #[test]
    fn summaries_are_permutation_invariant() {
        let v = [3.0, -1.0, 7.5, 2.25, 0.0, 9.0, -4.0];
        let mut w = v;
        w.reverse();
        w.swap(1, 4);
        assert_eq!(summarize_values("a", &v).unwrap(), summarize_values("a", &w).unwrap());
    }

    #[test]
    fn scalar_names_round_trip() {
        let mut all = Scalar::parameters(&params(0.0, 1.0));
        all.extend(Scalar::random_effects(2, 1));
        all.extend(DerivedField::ALL.iter().map(|d| Scalar::Derived(*d)));
        for s in all {
            assert_eq!(s.to_string().parse::<Scalar>().unwrap(), s);
        }
        assert!("nope".parse::<Scalar>().is_err());
    }

    #[test]
    fn derived_with_zero_phi_equals_innovation() {
        let c = chain(vec![params(0.0, 1.5), params(0.0, 2.5)]);
        for d in &c.draws {
            assert_eq!(Scalar::Derived(DerivedField::Sigma2S).value(&d.params).unwrap(), 2.0);
            assert_eq!(Scalar::Derived(DerivedField::SigmaSr).value(&d.params).unwrap(), 0.5);
            assert_eq!(
                Scalar::Derived(DerivedField::Sigma2G).value(&d.params).unwrap(),
                d.params.innov.gamma_g2
            );
        }
        assert_eq!(derived_posterior(&c).unwrap().len(), 7);
    }

    #[test]
    fn single_draw_derived_matches_lyapunov() {
        let c = chain(vec![params(0.5, 1.0)]);
        let out = derived_posterior(&c).unwrap();
        // scalar AR(1) on each coordinate: Sigma(0) = Gamma / (1 - 0.25)
        assert!((out[0].median - 2.0 / 0.75).abs() < 1e-12);
        assert!((out[1].median - 0.5 / 0.75).abs() < 1e-12);
        assert!((out[4].median - 1.0 / 0.75).abs() < 1e-12);
        assert!((out[6].median - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ess_on_reference_series() {
        let mut rng = RngStream::new(11, 0);
        let n = 10_000;
        let iid: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = effective_sample_size(&iid).unwrap();
        assert!((e / n as f64 - 1.0).abs() < 0.15, "{e}");
        let mut ar = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            x = 0.5 * x + z;
            ar.push(x);
        }
        let e = effective_sample_size(&ar).unwrap();
        assert!((e / (n as f64 / 3.0) - 1.0).abs() < 0.15, "{e}");
        assert_eq!(effective_sample_size(&[1.0; 20]).unwrap(), 1.0);
        assert_eq!(
            effective_sample_size(&[1.0; 5]),
            Err(Error::ChainTooShort { len: 5, min: 10 })
        );
    }

    #[test]
    fn trace_round_trip() {
        let c = chain(vec![params(0.1, 1.0), params(0.2, 1.0 / 3.0), params(0.3, 2.0)]);
        let series = trace_export(&c, Scalar::Gamma2G).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series[0].1, c.draws[0].params.innov.gamma_g2);
        let text = format_trace("gamma2_g", &series);
        let (name, back) = parse_trace(&text).unwrap();
        assert_eq!(name, "gamma2_g");
        assert_eq!(back, series);
        assert_eq!(trace_export(&chain(vec![]), Scalar::PhiG), Err(Error::EmptyChain));
    }
}
