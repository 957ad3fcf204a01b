//! Panel files: delimited text with a mandatory header
//! `sender,receiver,time,response[,covariate...]`, one row per directed
//! relation and time. `NA` or an empty cell marks a missing response.
//!
//! Actors are indexed in order of first appearance. Time values may be any
//! integers (years, say) but must form a contiguous range, which is mapped to
//! `1..T`; every ordered pair must appear at every time.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use lsr_core::model::{DyadPanel, Family};

use crate::error::{Error, Result};

const FIXED: [&str; 4] = ["sender", "receiver", "time", "response"];

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn parse_f64(line: usize, column: &str, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(line, column, format!("{s:?} is not a number")))
}

/// Reads and validates a panel.
pub fn read_panel<R: Read>(reader: R, family: Family) -> Result<DyadPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(csv_line(&e).max(1), "", e.to_string()))?
        .clone();
    if header.len() < FIXED.len() {
        return Err(Error::parse(1, "", format!("header needs at least the columns {}", FIXED.join(","))));
    }
    for (k, want) in FIXED.iter().enumerate() {
        if !header[k].eq_ignore_ascii_case(want) {
            return Err(Error::parse(1, &header[k], format!("expected column {want:?}")));
        }
    }
    let cov_names: Vec<String> = header.iter().skip(FIXED.len()).map(str::to_string).collect();
    let p = cov_names.len();

    struct Row {
        line: usize,
        i: usize,
        j: usize,
        time: i64,
        y: Option<f64>,
        x: Vec<f64>,
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(csv_line(&e), "", e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut actor = |name: &str, column: &str| -> Result<usize> {
            if name.is_empty() {
                return Err(Error::parse(line, column, "empty actor label"));
            }
            Ok(*index.entry(name.to_string()).or_insert_with(|| {
                labels.push(name.to_string());
                labels.len() - 1
            }))
        };
        let i = actor(&rec[0], "sender")?;
        let j = actor(&rec[1], "receiver")?;
        if i == j {
            return Err(Error::SelfLoop {
                line,
                label: rec[0].to_string(),
            });
        }
        let time = rec[2]
            .parse::<i64>()
            .map_err(|_| Error::parse(line, "time", format!("{:?} is not an integer", &rec[2])))?;
        let y = match &rec[3] {
            "" | "NA" | "na" | "NaN" => None,
            s => {
                let v = parse_f64(line, "response", s)?;
                if !v.is_finite() {
                    return Err(Error::parse(line, "response", "response must be finite"));
                }
                if family == Family::Binary && v != 0.0 && v != 1.0 {
                    return Err(Error::parse(line, "response", format!("binary response must be 0 or 1, got {s}")));
                }
                Some(v)
            }
        };
        let x = (0..p)
            .map(|k| {
                let v = parse_f64(line, &cov_names[k], &rec[FIXED.len() + k])?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse(line, &cov_names[k], "covariates must be observed and finite"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(Row { line, i, j, time, y, x });
    }
    if rows.is_empty() {
        return Err(Error::RaggedTime("panel has no rows".into()));
    }
    let t0 = rows.iter().map(|r| r.time).min().unwrap_or(0);
    let t1 = rows.iter().map(|r| r.time).max().unwrap_or(0);
    let times = usize::try_from(t1 - t0 + 1).map_err(|_| Error::RaggedTime("time range overflow".into()))?;
    let mut seen_time = vec![false; times];
    for r in &rows {
        seen_time[(r.time - t0) as usize] = true;
    }
    if let Some(gap) = seen_time.iter().position(|s| !s) {
        return Err(Error::RaggedTime(format!("no rows at time {}", t0 + gap as i64)));
    }

    let a = labels.len();
    let n = a * a * times;
    let mut response = vec![0.0; n];
    let mut observed = vec![false; n];
    let mut covariates = vec![0.0; n * p];
    let mut present = vec![false; n];
    for r in rows {
        let t = (r.time - t0) as usize;
        let c = (t * a + r.i) * a + r.j;
        if present[c] {
            return Err(Error::DuplicateTriple {
                line: r.line,
                sender: labels[r.i].clone(),
                receiver: labels[r.j].clone(),
                time: r.time,
            });
        }
        present[c] = true;
        if let Some(v) = r.y {
            response[c] = v;
            observed[c] = true;
        }
        covariates[c * p..(c + 1) * p].copy_from_slice(&r.x);
    }
    for c in 0..n {
        let (t, i, j) = (c / (a * a), c / a % a, c % a);
        if i != j && !present[c] {
            return Err(Error::RaggedTime(format!(
                "no row for ({}, {}) at time {}",
                labels[i],
                labels[j],
                t0 + t as i64
            )));
        }
    }
    Ok(DyadPanel::new(labels, times, family, cov_names, response, observed, covariates)?)
}

pub fn read_panel_file(path: &Path, family: Family) -> Result<DyadPanel> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(std::io::BufReader::new(f), family)
}

/// Emits every off-diagonal cell in `(time, sender, receiver)` order with
/// times `1..T`. Numbers use the shortest representation that parses back to
/// the same value.
pub fn write_panel(panel: &DyadPanel) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = FIXED.to_vec();
    header.extend(panel.covariate_names().iter().map(String::as_str));
    w.write_record(&header).expect("in-memory write");
    let a = panel.actors();
    let labels = panel.labels();
    for t in 0..panel.times() {
        for i in 0..a {
            for j in 0..a {
                if i == j {
                    continue;
                }
                let mut rec = vec![labels[i].clone(), labels[j].clone(), (t + 1).to_string()];
                rec.push(match panel.response(i, j, t) {
                    Some(v) => v.to_string(),
                    None => "NA".into(),
                });
                rec.extend(panel.covariate_row(i, j, t).iter().map(|v| v.to_string()));
                w.write_record(&rec).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 output")
}
