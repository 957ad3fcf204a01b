use alloc::vec;
use alloc::vec::Vec;

use super::panel::DyadPanel;
use super::params::BetaLayout;
use crate::error::{Error, Result};

/// `eta[i,j,t] = beta_t' x[i,j,t]` in the panel's cell layout. Diagonal cells are 0.
pub fn linear_predictor(panel: &DyadPanel, beta: &[f64], layout: BetaLayout) -> Result<Vec<f64>> {
    let p = panel.covariate_count();
    let t_n = panel.times();
    let want = layout.len(t_n, p);
    if beta.len() != want {
        return Err(Error::DimensionMismatch {
            expected: want,
            found: beta.len(),
        });
    }
    let a = panel.actors();
    let x = panel.covariate_values();
    let mut eta = vec![0.0; panel.cell_count()];
    for t in 0..t_n {
        let b = &beta[layout.offset(t, p)..layout.offset(t, p) + p];
        for i in 0..a {
            for j in 0..a {
                if i == j {
                    continue;
                }
                let c = panel.cell(i, j, t);
                eta[c] = x[c * p..(c + 1) * p]
                    .iter()
                    .zip(b)
                    .map(|(xv, bv)| xv * bv)
                    .sum();
            }
        }
    }
    Ok(eta)
}

/// Stacks a cell-indexed array for the pair `(i, j)` as
/// `(v[i,j,1], v[j,i,1], ..., v[i,j,T], v[j,i,T])`.
pub fn pair_vector(panel: &DyadPanel, values: &[f64], i: usize, j: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * panel.times());
    for t in 0..panel.times() {
        out.push(values[panel.cell(i, j, t)]);
        out.push(values[panel.cell(j, i, t)]);
    }
    out
}
