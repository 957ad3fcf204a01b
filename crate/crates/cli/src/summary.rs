//! Posterior summary tables, each a CSV file.

use lsr_core::model::BetaLayout;
use lsr_core::posterior::{
    derived_posterior, format_trace, median_imputations, summarize, trace_export, PosteriorChain, Scalar,
    ScalarSummary,
};
use lsr_core::sampler::ScanFlags;
use lsr_core::Error as CoreError;

use crate::error::Result;

const SUMMARY_HEADER: &str = "q025,median,q975,mean,sd";

fn stats(s: &ScalarSummary) -> String {
    format!("{},{},{},{},{}", s.q025, s.median, s.q975, s.mean, s.sd)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn table(names: &[Scalar], chain: &PosteriorChain) -> Result<String> {
    let mut out = format!("parameter,{SUMMARY_HEADER}\n");
    for s in summarize(chain, names)? {
        out.push_str(&format!("{},{}\n", s.name, stats(&s)));
    }
    Ok(out)
}

/// `beta` by time and covariate. A pooled layout has a single time `all`.
pub fn beta_table(chain: &PosteriorChain) -> Result<String> {
    let m = &chain.meta;
    let (tb, pooled) = match m.config.beta_layout {
        BetaLayout::PerTime => (m.times, false),
        BetaLayout::Pooled => (1, true),
    };
    let mut sel = Vec::new();
    for t in 0..tb {
        for k in 0..m.covariates() {
            sel.push(Scalar::Beta { t, k });
        }
    }
    let rows = summarize(chain, &sel)?;
    let mut out = format!("time,covariate,{SUMMARY_HEADER}\n");
    for (s, row) in sel.iter().zip(&rows) {
        let Scalar::Beta { t, k } = *s else { unreachable!() };
        let time = if pooled { "all".to_string() } else { (t + 1).to_string() };
        out.push_str(&format!("{time},{},{}\n", csv_field(&m.covariate_names[k]), stats(row)));
    }
    Ok(out)
}

/// Every sender/receiver draw, one row per draw, actor and time.
pub fn sr_samples(chain: &PosteriorChain) -> Result<String> {
    if chain.is_empty() {
        return Err(CoreError::EmptyChain.into());
    }
    let m = &chain.meta;
    let mut out = String::from("scan,actor,time,sender,receiver\n");
    for d in &chain.draws {
        for (i, label) in m.labels.iter().enumerate() {
            let label = csv_field(label);
            for t in 0..m.times {
                out.push_str(&format!(
                    "{},{label},{},{:?},{:?}\n",
                    d.scan,
                    t + 1,
                    d.params.sr.sender(i, t),
                    d.params.sr.receiver(i, t)
                ));
            }
        }
    }
    Ok(out)
}

/// Lag-zero variances and correlations implied by each draw. For the binary
/// family `sigma2_g` is 1 by construction.
pub fn derived_table(chain: &PosteriorChain) -> Result<String> {
    let mut out = format!("parameter,{SUMMARY_HEADER}\n");
    for s in derived_posterior(chain)? {
        out.push_str(&format!("{},{}\n", s.name, stats(&s)));
    }
    Ok(out)
}

pub fn phi_table(chain: &PosteriorChain) -> Result<String> {
    table(
        &[Scalar::PhiS, Scalar::PhiSr, Scalar::PhiRs, Scalar::PhiR, Scalar::PhiG, Scalar::PhiGg],
        chain,
    )
}

/// Innovation covariance parameters; `rho_gg` is included for the binary family.
pub fn innovation_table(chain: &PosteriorChain) -> Result<String> {
    let mut sel = vec![Scalar::Gamma2S, Scalar::GammaSr, Scalar::Gamma2R, Scalar::Gamma2G, Scalar::LambdaGg];
    if chain.draws.first().is_some_and(|d| d.params.rho_gg.is_some()) {
        sel.push(Scalar::RhoGg);
    }
    table(&sel, chain)
}

pub fn acceptance_table(chain: &PosteriorChain) -> String {
    let acc = &chain.meta.acceptance;
    let mut out = String::from("step,accepted,rejected,gibbs,fixed,rate\n");
    for (k, name) in ScanFlags::STEP_NAMES.iter().enumerate() {
        let [a, r, g, f] = acc.counts[k];
        let rate = acc.rate(k).map_or("NA".to_string(), |x| x.to_string());
        out.push_str(&format!("{name},{a},{r},{g},{f},{rate}\n"));
    }
    out
}

/// Posterior medians of the imputed responses at the missing cells.
pub fn imputation_table(chain: &PosteriorChain) -> Result<String> {
    let m = &chain.meta;
    let a = m.actors();
    let mut out = String::from("sender,receiver,time,median\n");
    for (c, v) in median_imputations(chain)? {
        let (t, i, j) = (c / (a * a), c / a % a, c % a);
        out.push_str(&format!("{},{},{},{v:?}\n", csv_field(&m.labels[i]), csv_field(&m.labels[j]), t + 1));
    }
    Ok(out)
}

/// One `(file name, contents)` pair per table and per parameter trace.
pub fn all_tables(chain: &PosteriorChain) -> Result<Vec<(String, String)>> {
    if chain.is_empty() {
        return Err(CoreError::EmptyChain.into());
    }
    let mut files = vec![
        ("beta.csv".to_string(), beta_table(chain)?),
        ("phi.csv".into(), phi_table(chain)?),
        ("innovation.csv".into(), innovation_table(chain)?),
        ("derived.csv".into(), derived_table(chain)?),
        ("acceptance.csv".into(), acceptance_table(chain)),
        ("sr_samples.csv".into(), sr_samples(chain)?),
    ];
    if !chain.meta.missing_cells.is_empty() {
        files.push(("imputed.csv".into(), imputation_table(chain)?));
    }
    for s in Scalar::parameters(&chain.draws[0].params) {
        if s == Scalar::RhoGg && chain.draws[0].params.rho_gg.is_none() {
            continue;
        }
        let name = s.to_string();
        let file = format!("trace_{}.csv", name.replace(['[', ']'], "").replace(',', "_"));
        files.push((file, format_trace(&name, &trace_export(chain, s)?)));
    }
    Ok(files)
}
