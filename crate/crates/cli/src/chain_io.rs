//! Chain files.
//!
//! Text: metadata as `# key = value` lines, then a CSV header and one row per
//! draw. Binary: the magic `LSRCHAIN`, a little-endian `u64` byte length and
//! the same metadata text, then one record per draw, each a `u32` byte length
//! followed by the scan (`u64`), nine outcome bytes and the values as `f64`.
//! Both carry identical information and convert into each other without loss.
//!
//! Columns in order: `scan`, `flags` (one letter per step: `A`ccepted,
//! `R`ejected, `G`ibbs, `F`ixed), the model parameters, the sender/receiver
//! effects, `y[c]` for each missing cell, and `z[c]` for every off-diagonal
//! cell when the latent draws were kept. Binary files write an absent
//! `rho_gg` as NaN; text files write `NA`.

use std::path::Path;

use lsr_core::model::{Family, ModelParameters, SrEffects};
use lsr_core::numerics::Mat2;
use lsr_core::posterior::{AcceptanceSummary, ChainMeta, PosteriorChain, Scalar};
use lsr_core::sampler::{ChainDraw, SamplerConfig, ScanFlags, SrForm, StepOutcome, Structure};

use crate::config::ChainFormat;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::kv::{KvMap, KvWriter};

const MAGIC: &[u8; 8] = b"LSRCHAIN";
const VERSION: u32 = 1;

fn outcome_letter(o: StepOutcome) -> u8 {
    match o {
        StepOutcome::Accepted => b'A',
        StepOutcome::Rejected => b'R',
        StepOutcome::GibbsExact => b'G',
        StepOutcome::Fixed => b'F',
    }
}

fn letter_outcome(b: u8) -> Option<StepOutcome> {
    Some(match b {
        b'A' => StepOutcome::Accepted,
        b'R' => StepOutcome::Rejected,
        b'G' => StepOutcome::GibbsExact,
        b'F' => StepOutcome::Fixed,
        _ => return None,
    })
}

fn flags_bytes(f: &ScanFlags) -> [u8; 9] {
    f.as_array().map(outcome_letter)
}

fn bytes_flags(b: &[u8]) -> Option<ScanFlags> {
    if b.len() != 9 {
        return None;
    }
    let o: Vec<StepOutcome> = b.iter().map(|&c| letter_outcome(c)).collect::<Option<_>>()?;
    Some(ScanFlags {
        beta: o[0],
        sr: o[1],
        phi_sr: o[2],
        phi_gg: o[3],
        gamma_sr: o[4],
        gamma_gg: o[5],
        missing: o[6],
        theta: o[7],
        rho_gg: o[8],
    })
}

/// Labels may contain anything; commas, percent signs and line breaks are
/// percent-escaped inside list values.
fn escape(s: &str) -> String {
    s.replace('%', "%25").replace(',', "%2C").replace('\n', "%0A").replace('\r', "%0D")
}

fn unescape(s: &str) -> String {
    s.replace("%2C", ",").replace("%0A", "\n").replace("%0D", "\r").replace("%25", "%")
}

fn put_names(w: &mut KvWriter, key: &str, names: &[String]) {
    let e: Vec<String> = names.iter().map(|n| escape(n)).collect();
    w.put_list(key, &e);
}

fn take_names(kv: &mut KvMap, key: &str) -> Result<Vec<String>> {
    Ok(kv
        .take_list::<String>(key)?
        .unwrap_or_default()
        .iter()
        .map(|s| unescape(s))
        .collect())
}

/// Shape of one draw's value vector.
struct Layout {
    n_beta: usize,
    actors: usize,
    times: usize,
    missing: usize,
    latent: bool,
}

impl Layout {
    fn of(meta: &ChainMeta, latent: bool) -> Self {
        Layout {
            n_beta: meta.config.beta_layout.len(meta.times, meta.covariates()),
            actors: meta.actors(),
            times: meta.times,
            missing: meta.missing_cells.len(),
            latent,
        }
    }

    fn cells(&self) -> usize {
        self.actors * self.actors * self.times
    }

    fn width(&self) -> usize {
        let latent = if self.latent { self.cells() - self.actors * self.times } else { 0 };
        self.n_beta + 12 + 2 * self.actors * self.times + self.missing + latent
    }

    fn off_diagonal(&self) -> impl Iterator<Item = usize> + '_ {
        let a = self.actors;
        (0..self.cells()).filter(move |c| c / a % a != c % a)
    }
}

fn column_names(meta: &ChainMeta, layout: &Layout) -> Vec<String> {
    let proto = ModelParameters {
        beta: vec![0.0; layout.n_beta],
        beta_layout: meta.config.beta_layout,
        covariates: meta.covariates(),
        ar: lsr_core::model::ArCoefficients::zero(),
        innov: lsr_core::model::InnovationCov::identity(),
        rho_gg: None,
        sr: SrEffects::zeros(layout.actors, layout.times),
    };
    let mut cols: Vec<String> = Scalar::parameters(&proto).iter().map(|s| s.to_string()).collect();
    for i in 0..layout.actors {
        for t in 0..layout.times {
            cols.push(Scalar::Sender { i, t }.to_string());
            cols.push(Scalar::Receiver { i, t }.to_string());
        }
    }
    cols.extend(meta.missing_cells.iter().map(|c| format!("y[{c}]")));
    if layout.latent {
        cols.extend(layout.off_diagonal().map(|c| format!("z[{c}]")));
    }
    cols
}

fn draw_values(d: &ChainDraw, layout: &Layout) -> Vec<f64> {
    let p = &d.params;
    let mut v = Vec::with_capacity(layout.width());
    v.extend_from_slice(&p.beta);
    v.extend([
        p.ar.phi_sr[(0, 0)],
        p.ar.phi_sr[(0, 1)],
        p.ar.phi_sr[(1, 0)],
        p.ar.phi_sr[(1, 1)],
        p.ar.phi_g,
        p.ar.phi_gg,
        p.innov.gamma_sr[(0, 0)],
        p.innov.gamma_sr[(0, 1)],
        p.innov.gamma_sr[(1, 1)],
        p.innov.gamma_g2,
        p.innov.lambda_gg,
        p.rho_gg.unwrap_or(f64::NAN),
    ]);
    v.extend_from_slice(p.sr.values());
    v.extend_from_slice(&d.imputed);
    if layout.latent {
        let z = d.latent.as_deref().unwrap_or(&[]);
        v.extend(layout.off_diagonal().map(|c| z.get(c).copied().unwrap_or(f64::NAN)));
    }
    v
}

fn draw_from_values(scan: usize, flags: ScanFlags, v: &[f64], meta: &ChainMeta, layout: &Layout) -> ChainDraw {
    let nb = layout.n_beta;
    let s = &v[nb..nb + 12];
    let n_sr = 2 * layout.actors * layout.times;
    let sr_end = nb + 12 + n_sr;
    let imp_end = sr_end + layout.missing;
    let latent = layout.latent.then(|| {
        let mut z = vec![0.0; layout.cells()];
        for (c, &x) in layout.off_diagonal().zip(&v[imp_end..]) {
            z[c] = x;
        }
        z
    });
    ChainDraw {
        scan,
        params: ModelParameters {
            beta: v[..nb].to_vec(),
            beta_layout: meta.config.beta_layout,
            covariates: meta.covariates(),
            ar: lsr_core::model::ArCoefficients {
                phi_sr: Mat2::new(s[0], s[1], s[2], s[3]),
                phi_g: s[4],
                phi_gg: s[5],
            },
            innov: lsr_core::model::InnovationCov {
                gamma_sr: Mat2::new(s[6], s[7], s[7], s[8]),
                gamma_g2: s[9],
                lambda_gg: s[10],
            },
            rho_gg: (!s[11].is_nan()).then_some(s[11]),
            sr: SrEffects::from_values(layout.actors, layout.times, v[nb + 12..sr_end].to_vec()),
        },
        imputed: v[sr_end..imp_end].to_vec(),
        latent,
        flags,
    }
}

fn meta_text(chain: &PosteriorChain, latent: bool) -> String {
    let m = &chain.meta;
    let c = &m.config;
    let mut w = KvWriter::new();
    w.put("format", VERSION)
        .put("family", m.family.as_str())
        .put("fingerprint", m.fingerprint)
        .put("times", m.times);
    put_names(&mut w, "labels", &m.labels);
    put_names(&mut w, "covariates", &m.covariate_names);
    w.put_list("missing_cells", &m.missing_cells)
        .put("latent", latent)
        .put("total_scans", c.total_scans)
        .put("burn_in", c.burn_in)
        .put("thin", c.thin)
        .put("gibbs_vs_randomwalk_probability", c.gibbs_vs_randomwalk_probability)
        .put("rw_step_phi", c.rw_step_phi)
        .put("rw_step_gamma", c.rw_step_gamma)
        .put("rho_halfwidth", c.rho_halfwidth)
        .put("seed", c.seed)
        .put("sr_form", c.structure.sr.as_str())
        .put("gg_temporal", c.structure.gg_temporal)
        .put("gg_reciprocal", c.structure.gg_reciprocal)
        .put("beta_layout", c.beta_layout.as_str())
        .put("store_latent", c.store_latent);
    let counts: Vec<usize> = m.acceptance.counts.iter().flatten().copied().collect();
    w.put_list("acceptance", &counts);
    w.finish()
}

fn parse_meta(text: &str) -> Result<(ChainMeta, bool)> {
    let mut kv = KvMap::parse(text)?;
    let version: u32 = kv.take_required("format")?;
    if version != VERSION {
        return Err(Error::ConfigInvalid(format!("unsupported chain format version {version}")));
    }
    let family: Family = kv.take_required("family")?;
    let fingerprint = kv.take_required("fingerprint")?;
    let times = kv.take_required("times")?;
    let labels = take_names(&mut kv, "labels")?;
    let covariate_names = take_names(&mut kv, "covariates")?;
    let missing_cells = kv.take_list("missing_cells")?.unwrap_or_default();
    let latent = kv.take_required("latent")?;
    let config = SamplerConfig {
        total_scans: kv.take_required("total_scans")?,
        burn_in: kv.take_required("burn_in")?,
        thin: kv.take_required("thin")?,
        gibbs_vs_randomwalk_probability: kv.take_required("gibbs_vs_randomwalk_probability")?,
        rw_step_phi: kv.take_required("rw_step_phi")?,
        rw_step_gamma: kv.take_required("rw_step_gamma")?,
        rho_halfwidth: kv.take_required("rho_halfwidth")?,
        seed: kv.take_required("seed")?,
        structure: Structure {
            sr: kv.take_required::<SrForm>("sr_form")?,
            gg_temporal: kv.take_required("gg_temporal")?,
            gg_reciprocal: kv.take_required("gg_reciprocal")?,
        },
        beta_layout: kv.take_required("beta_layout")?,
        store_latent: kv.take_required("store_latent")?,
    };
    let counts: Vec<usize> = kv.take_list("acceptance")?.unwrap_or_default();
    if counts.len() != 36 {
        return Err(Error::ConfigInvalid(format!("acceptance needs 36 counts, got {}", counts.len())));
    }
    let mut acceptance = AcceptanceSummary::default();
    for (k, c) in counts.into_iter().enumerate() {
        acceptance.counts[k / 4][k % 4] = c;
    }
    kv.finish()?;
    Ok((
        ChainMeta {
            config,
            family,
            fingerprint,
            labels,
            covariate_names,
            times,
            missing_cells,
            acceptance,
        },
        latent,
    ))
}

fn has_latent(chain: &PosteriorChain) -> bool {
    chain.draws.first().is_some_and(|d| d.latent.is_some())
}

pub fn to_text(chain: &PosteriorChain) -> String {
    let latent = has_latent(chain);
    let layout = Layout::of(&chain.meta, latent);
    let mut out = String::new();
    for line in meta_text(chain, latent).lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("scan,flags,");
    out.push_str(&column_names(&chain.meta, &layout).join(","));
    out.push('\n');
    for d in &chain.draws {
        out.push_str(&d.scan.to_string());
        out.push(',');
        out.push_str(std::str::from_utf8(&flags_bytes(&d.flags)).expect("ascii"));
        for v in draw_values(d, &layout) {
            out.push(',');
            if v.is_nan() {
                out.push_str("NA");
            } else {
                out.push_str(&format!("{v:?}"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<PosteriorChain> {
    let mut meta_src = String::new();
    let mut body = Vec::new();
    let mut first_body_line = 0;
    for (k, line) in text.lines().enumerate() {
        match line.strip_prefix('#') {
            Some(m) if body.is_empty() => {
                meta_src.push_str(m.trim_start());
                meta_src.push('\n');
            }
            _ => {
                if body.is_empty() {
                    first_body_line = k + 1;
                }
                body.push(line);
            }
        }
    }
    let (meta, latent) = parse_meta(&meta_src)?;
    let layout = Layout::of(&meta, latent);
    let header = body
        .first()
        .ok_or_else(|| Error::parse(first_body_line.max(1), "", "missing column header"))?;
    let want = format!("scan,flags,{}", column_names(&meta, &layout).join(","));
    if *header != want {
        return Err(Error::parse(first_body_line, "", "column header does not match the metadata"));
    }
    let mut draws = Vec::with_capacity(body.len() - 1);
    for (k, line) in body.iter().enumerate().skip(1) {
        let ln = first_body_line + k;
        let mut fields = line.split(',');
        let scan = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(ln, "scan", "bad scan index"))?;
        let flags = fields
            .next()
            .and_then(|s| bytes_flags(s.as_bytes()))
            .ok_or_else(|| Error::parse(ln, "flags", "bad step flags"))?;
        let values = fields
            .map(|s| if s == "NA" { Ok(f64::NAN) } else { s.parse::<f64>() })
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(ln, "", e.to_string()))?;
        if values.len() != layout.width() {
            return Err(Error::parse(ln, "", format!("expected {} values, got {}", layout.width(), values.len())));
        }
        draws.push(draw_from_values(scan, flags, &values, &meta, &layout));
    }
    Ok(PosteriorChain { draws, meta })
}

pub fn to_binary(chain: &PosteriorChain) -> Vec<u8> {
    let latent = has_latent(chain);
    let layout = Layout::of(&chain.meta, latent);
    let meta = meta_text(chain, latent);
    let mut out = Vec::with_capacity(16 + meta.len() + chain.len() * (21 + 8 * layout.width()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(meta.as_bytes());
    for d in &chain.draws {
        let values = draw_values(d, &layout);
        let len = 8 + 9 + 8 * values.len();
        out.extend_from_slice(&(len as u32).to_le_bytes());
        out.extend_from_slice(&(d.scan as u64).to_le_bytes());
        out.extend_from_slice(&flags_bytes(&d.flags));
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(format!("corrupt binary chain: {}", msg.into()))
}

pub fn from_binary(bytes: &[u8]) -> Result<PosteriorChain> {
    let rest = bytes.strip_prefix(MAGIC.as_slice()).ok_or_else(|| corrupt("bad magic"))?;
    let (len, rest) = rest.split_at_checked(8).ok_or_else(|| corrupt("truncated header"))?;
    let len = u64::from_le_bytes(len.try_into().expect("8 bytes")) as usize;
    let (meta, mut rest) = rest.split_at_checked(len).ok_or_else(|| corrupt("truncated metadata"))?;
    let meta = std::str::from_utf8(meta).map_err(|_| corrupt("metadata is not utf-8"))?;
    let (meta, latent) = parse_meta(meta)?;
    let layout = Layout::of(&meta, latent);
    let want = 17 + 8 * layout.width();
    let mut draws = Vec::new();
    while !rest.is_empty() {
        let (len, tail) = rest.split_at_checked(4).ok_or_else(|| corrupt("truncated record length"))?;
        let len = u32::from_le_bytes(len.try_into().expect("4 bytes")) as usize;
        if len != want {
            return Err(corrupt(format!("record {} has {len} bytes, expected {want}", draws.len() + 1)));
        }
        let (rec, tail) = tail.split_at_checked(len).ok_or_else(|| corrupt("truncated record"))?;
        let scan = u64::from_le_bytes(rec[..8].try_into().expect("8 bytes")) as usize;
        let flags = bytes_flags(&rec[8..17]).ok_or_else(|| corrupt("bad step flags"))?;
        let values: Vec<f64> = rec[17..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        draws.push(draw_from_values(scan, flags, &values, &meta, &layout));
        rest = tail;
    }
    Ok(PosteriorChain { draws, meta })
}

/// Picks the format from the leading bytes.
pub fn read_chain(path: &Path) -> Result<PosteriorChain> {
    let bytes = fsutil::read_bytes(path)?;
    if bytes.starts_with(MAGIC) {
        from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::parse(0, "", "chain file is neither text nor binary"))?;
        from_text(&text)
    }
}

pub fn write_chain(path: &Path, chain: &PosteriorChain, format: ChainFormat) -> Result<()> {
    let bytes = match format {
        ChainFormat::Text => to_text(chain).into_bytes(),
        ChainFormat::Binary => to_binary(chain),
    };
    fsutil::write_atomic(path, &bytes)
}
