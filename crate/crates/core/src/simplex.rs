//! Euclidean projection onto the solid simplex `{x >= 0 : sum(x) <= r}`.

use crate::error::{Error, Result};

/// Projection of a nonnegative vector onto the solid simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    /// `max(v_i - tau, 0)` for every entry.
    pub projected: Vec<f64>,
    /// Soft threshold; `0` when the input already lies in the simplex.
    pub tau: f64,
    /// Number of strictly positive entries of `projected`.
    pub support_size: usize,
}

/// Projects `v` onto the solid simplex of the given radius (sort-then-threshold).
pub fn project_simplex(v: &[f64], radius: f64) -> Result<SimplexResult> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Precondition(format!(
            "simplex radius must be finite and nonnegative, got {radius}"
        )));
    }
    if let Some((i, &x)) = v.iter().enumerate().find(|(_, x)| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Precondition(format!(
            "simplex input must be finite and nonnegative, entry {i} is {x}"
        )));
    }
    Ok(project_simplex_unchecked(v, radius))
}

pub(crate) fn project_simplex_unchecked(v: &[f64], radius: f64) -> SimplexResult {
    let total: f64 = v.iter().sum();
    if total <= radius {
        return SimplexResult {
            projected: v.to_vec(),
            tau: 0.0,
            support_size: v.iter().filter(|&&x| x > 0.0).count(),
        };
    }
    let tau = simplex_threshold(v, radius);
    let projected: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    let support_size = projected.iter().filter(|&&x| x > 0.0).count();
    SimplexResult {
        projected,
        tau,
        support_size,
    }
}

/// Threshold `tau` for `sum(v) > radius`: sort descending and take the largest
/// `k` with `(S_k - radius) / k < z_k`.
fn simplex_threshold(v: &[f64], radius: f64) -> f64 {
    let mut z = v.to_vec();
    z.sort_unstable_by(|a, b| b.total_cmp(a));
    // k = 1 always qualifies (with equality when radius = 0).
    let mut prefix = z[0];
    let mut tau = z[0] - radius;
    for (k, &zk) in z.iter().enumerate().skip(1) {
        let t = (prefix + zk - radius) / (k + 1) as f64;
        if t < zk {
            prefix += zk;
            tau = t;
        } else {
            break;
        }
    }
    tau
}
