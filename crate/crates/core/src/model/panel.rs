use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Response family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian,
    Binary,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Binary => "binary",
        }
    }
}

impl core::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "binary" | "probit" => Ok(Family::Binary),
            other => Err(Error::ConfigInvalid(format!("unknown family {other:?}"))),
        }
    }
}

/// Directed dyadic panel: responses `y[i,j,t]` with a missingness mask and
/// fully observed covariates `x[i,j,t,k]`.
///
/// Cells are stored time-major, `cell(i, j, t) = (t * A + i) * A + j`.
/// Diagonal cells (`i == j`) are undefined and never observed.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadPanel {
    labels: Vec<String>,
    times: usize,
    family: Family,
    covariate_names: Vec<String>,
    response: Vec<f64>,
    observed: Vec<bool>,
    covariates: Vec<f64>,
}

impl DyadPanel {
    /// Builds a panel from per-cell closures. `response` returns `None` for
    /// missing values; both closures are only called off the diagonal.
    pub fn from_fn<F, G>(
        labels: Vec<String>,
        times: usize,
        family: Family,
        covariate_names: Vec<String>,
        mut response: F,
        mut covariate: G,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> Option<f64>,
        G: FnMut(usize, usize, usize, usize) -> f64,
    {
        let a = labels.len();
        let p = covariate_names.len();
        let n = a * a * times;
        let mut y = vec![0.0; n];
        let mut obs = vec![false; n];
        let mut x = vec![0.0; n * p];
        for t in 0..times {
            for i in 0..a {
                for j in 0..a {
                    if i == j {
                        continue;
                    }
                    let c = (t * a + i) * a + j;
                    if let Some(v) = response(i, j, t) {
                        y[c] = v;
                        obs[c] = true;
                    }
                    for k in 0..p {
                        x[c * p + k] = covariate(i, j, t, k);
                    }
                }
            }
        }
        Self::new(labels, times, family, covariate_names, y, obs, x)
    }

    /// Builds a panel from flat arrays in the documented cell layout.
    pub fn new(
        labels: Vec<String>,
        times: usize,
        family: Family,
        covariate_names: Vec<String>,
        response: Vec<f64>,
        observed: Vec<bool>,
        covariates: Vec<f64>,
    ) -> Result<Self> {
        let a = labels.len();
        let p = covariate_names.len();
        if a == 0 || times == 0 {
            return Err(Error::InvalidPanel(
                "panel needs at least one actor and one time point".to_string(),
            ));
        }
        let n = a * a * times;
        if response.len() != n || observed.len() != n || covariates.len() != n * p {
            return Err(Error::InvalidPanel(format!(
                "array lengths do not match {a} actors, {times} times, {p} covariates"
            )));
        }
        for (idx, l) in labels.iter().enumerate() {
            if labels[..idx].contains(l) {
                return Err(Error::InvalidPanel(format!("duplicate actor label {l:?}")));
            }
        }
        let mut panel = Self {
            labels,
            times,
            family,
            covariate_names,
            response,
            observed,
            covariates,
        };
        for c in 0..n {
            let (i, j, t) = panel.cell_coords(c);
            if i == j {
                if panel.observed[c] {
                    return Err(Error::InvalidPanel(format!(
                        "self-loop observation for actor {i} at time {t}"
                    )));
                }
                panel.response[c] = 0.0;
                panel.covariates[c * p..(c + 1) * p].fill(0.0);
                continue;
            }
            if panel.covariates[c * p..(c + 1) * p]
                .iter()
                .any(|v| !v.is_finite())
            {
                return Err(Error::InvalidPanel(format!(
                    "non-finite covariate at ({i}, {j}, {t})"
                )));
            }
            if !panel.observed[c] {
                panel.response[c] = 0.0;
                continue;
            }
            let v = panel.response[c];
            let ok = match family {
                Family::Gaussian => v.is_finite(),
                Family::Binary => v == 0.0 || v == 1.0,
            };
            if !ok {
                return Err(Error::InvalidPanel(format!(
                    "invalid {} response {v} at ({i}, {j}, {t})",
                    family.as_str()
                )));
            }
        }
        Ok(panel)
    }

    pub fn actors(&self) -> usize {
        self.labels.len()
    }

    pub fn times(&self) -> usize {
        self.times
    }

    /// Number of covariates `p`.
    pub fn covariate_count(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn cell_count(&self) -> usize {
        self.response.len()
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize, t: usize) -> usize {
        let a = self.labels.len();
        (t * a + i) * a + j
    }

    #[inline]
    pub fn cell_coords(&self, cell: usize) -> (usize, usize, usize) {
        let a = self.labels.len();
        (cell / a % a, cell % a, cell / (a * a))
    }

    pub fn response(&self, i: usize, j: usize, t: usize) -> Option<f64> {
        let c = self.cell(i, j, t);
        self.observed[c].then(|| self.response[c])
    }

    /// Raw response storage; entries at unobserved cells are 0.
    pub fn response_values(&self) -> &[f64] {
        &self.response
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, cell: usize) -> bool {
        self.observed[cell]
    }

    pub fn covariate_row(&self, i: usize, j: usize, t: usize) -> &[f64] {
        let p = self.covariate_count();
        let c = self.cell(i, j, t);
        &self.covariates[c * p..(c + 1) * p]
    }

    pub fn covariate_values(&self) -> &[f64] {
        &self.covariates
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Off-diagonal cells without an observed response, in storage order.
    pub fn missing_cells(&self) -> Vec<usize> {
        (0..self.cell_count())
            .filter(|&c| {
                let (i, j, _) = self.cell_coords(c);
                i != j && !self.observed[c]
            })
            .collect()
    }

    /// Off-diagonal cells with an observed response, in storage order.
    pub fn observed_cells(&self) -> Vec<usize> {
        (0..self.cell_count()).filter(|&c| self.observed[c]).collect()
    }

    /// Unordered pairs `(i, j)` with `i < j`, lexicographic.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let a = self.actors();
        (0..a).flat_map(move |i| (i + 1..a).map(move |j| (i, j)))
    }

    pub fn pair_count(&self) -> usize {
        let a = self.actors();
        a * a.saturating_sub(1) / 2
    }

    /// A copy with the given cells' responses marked missing. Covariates are untouched.
    pub fn with_masked(&self, cells: &[usize]) -> Self {
        let mut out = self.clone();
        for &c in cells {
            out.observed[c] = false;
            out.response[c] = 0.0;
        }
        out
    }

    /// A copy whose design is a single intercept column.
    pub fn with_intercept_only(&self) -> Self {
        let mut out = self.clone();
        out.covariate_names = vec!["intercept".to_string()];
        out.covariates = (0..self.cell_count())
            .map(|c| {
                let (i, j, _) = self.cell_coords(c);
                if i == j {
                    0.0
                } else {
                    1.0
                }
            })
            .collect();
        out
    }

    /// 64-bit FNV-1a digest of the panel contents.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.family.as_str().as_bytes());
        eat(&(self.times as u64).to_le_bytes());
        for l in &self.labels {
            eat(l.as_bytes());
            eat(&[0]);
        }
        for n in &self.covariate_names {
            eat(n.as_bytes());
            eat(&[0]);
        }
        for (v, o) in self.response.iter().zip(&self.observed) {
            eat(&[*o as u8]);
            eat(&v.to_bits().to_le_bytes());
        }
        for v in &self.covariates {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}
