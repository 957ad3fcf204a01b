use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::special::{norm_ppf, norm_sf};
use crate::error::{Error, Result};

/// Which side of zero a truncated normal draw must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `x < 0`
    Negative,
    /// `x > 0`
    Positive,
}

// Beyond this many standard deviations into the tail, switch from inverse-CDF
// to exponential rejection.
const TAIL_SWITCH: f64 = 5.0;

/// Standard normal restricted to `z > lower`.
fn std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower >= TAIL_SWITCH {
        // Robert (1995) translated-exponential rejection with the optimal rate.
        let rate = 0.5 * (lower + libm::sqrt(lower * lower + 4.0));
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = lower + e / rate;
            let u: f64 = rng.random();
            let d = z - rate;
            if u < libm::exp(-0.5 * d * d) && z > lower {
                return z;
            }
        }
    }
    let tail = norm_sf(lower);
    loop {
        // u in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let z = -norm_ppf(u * tail);
        if z > lower && z.is_finite() {
            return z;
        }
    }
}

/// Draw from `normal(mean, var)` restricted to the given side of zero.
pub fn truncated_normal_sample<R: Rng + ?Sized>(
    mean: f64,
    var: f64,
    side: Sign,
    rng: &mut R,
) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::NonpositiveVariance(var));
    }
    let sd = libm::sqrt(var);
    loop {
        let x = match side {
            Sign::Positive => mean + sd * std_normal_above(-mean / sd, rng),
            Sign::Negative => mean - sd * std_normal_above(mean / sd, rng),
        };
        // guard against round-off landing exactly on zero
        let ok = match side {
            Sign::Positive => x > 0.0,
            Sign::Negative => x < 0.0,
        };
        if ok {
            return Ok(x);
        }
    }
}
