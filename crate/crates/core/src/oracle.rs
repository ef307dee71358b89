//! Reference solvers used to certify the projection algorithms.
//!
//! Both solve the nonnegative problem through its threshold form: a single
//! `theta >= 0` is removed from every column whose total exceeds it, and
//! columns whose total is at most `theta` are zeroed. Neither shares code
//! with the fast algorithms beyond [`project_simplex`].

use crate::error::{Error, Result};
use crate::matrix::{norm_l1_inf, DenseMatrix};
use crate::simplex::project_simplex;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub x: DenseMatrix,
    pub theta: f64,
    /// `|sum_j mu_j(theta) - C|` at the reported threshold.
    pub residual: f64,
    /// Bisection steps, or configurations enumerated by the KKT search.
    pub iterations: usize,
}

fn check_input(ynn: &DenseMatrix, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!("radius must be positive, got {c}")));
    }
    if ynn.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("oracle input must be nonnegative".into()));
    }
    let norm = norm_l1_inf(ynn);
    if norm <= c {
        return Err(Error::Precondition(format!(
            "input lies inside the ball (norm {norm} <= radius {c})"
        )));
    }
    Ok(())
}

/// Sum of column caps at threshold `theta`: each column contributes the soft
/// threshold of its simplex projection with radius `theta`, or nothing when
/// its total does not exceed `theta`.
pub fn cap_sum(ynn: &DenseMatrix, theta: f64) -> f64 {
    ynn.columns()
        .map(|col| {
            let total: f64 = col.iter().sum();
            if total > theta {
                project_simplex(col, theta.max(0.0))
                    .expect("nonnegative column and radius")
                    .tau
            } else {
                0.0
            }
        })
        .sum()
}

/// Threshold for which the affine piece of `cap_sum` through `theta` hits `C`.
fn linear_piece_root(ynn: &DenseMatrix, c: f64, theta: f64) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for col in ynn.columns() {
        let total: f64 = col.iter().sum();
        if total <= theta {
            continue;
        }
        let tau = project_simplex(col, theta).ok()?.tau;
        let above: Vec<f64> = col.iter().copied().filter(|&v| v > tau).collect();
        if above.is_empty() {
            continue;
        }
        let k = above.len() as f64;
        num += above.iter().sum::<f64>() / k;
        den += 1.0 / k;
    }
    (den > 0.0).then(|| (num - c) / den)
}

/// Bisection on the nonincreasing, piecewise-linear map `theta -> cap_sum`.
///
/// The bracket `[0, max column total]` is always valid: the cap sum equals
/// the l1,inf norm at 0 and vanishes at the largest column total. Stops when
/// the residual is within `tol` and the bracket is narrower than
/// `tol * (1 + initial width)`, then tries the exact root of the linear piece
/// at the final point and keeps whichever threshold has the smaller residual.
pub fn theta_by_bisection(ynn: &DenseMatrix, c: f64, tol: f64) -> Result<OracleResult> {
    check_input(ynn, c)?;
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let mut lo = 0.0_f64;
    let mut hi = ynn
        .columns()
        .map(|col| col.iter().sum::<f64>())
        .fold(0.0, f64::max);
    let width0 = hi - lo;
    let mut g_lo = cap_sum(ynn, lo);
    let mut g_hi = cap_sum(ynn, hi);
    debug_assert!(g_lo > c && g_hi <= c);

    let mut theta = 0.5 * (lo + hi);
    let mut g = cap_sum(ynn, theta);
    let mut iterations = 1;
    loop {
        assert!(
            g <= g_lo + 1e-12 * (1.0 + g_lo) && g >= g_hi - 1e-12 * (1.0 + g_lo),
            "cap sum is not monotone: g({lo})={g_lo}, g({theta})={g}, g({hi})={g_hi}"
        );
        if g > c {
            lo = theta;
            g_lo = g;
        } else {
            hi = theta;
            g_hi = g;
        }
        if (g - c).abs() <= tol && hi - lo <= tol * (1.0 + width0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations >= 200 {
            break;
        }
        theta = mid;
        g = cap_sum(ynn, theta);
        iterations += 1;
    }

    let mut residual = (g - c).abs();
    if let Some(t) = linear_piece_root(ynn, c, theta) {
        if t >= 0.0 {
            let r = (cap_sum(ynn, t) - c).abs();
            if r < residual {
                theta = t;
                residual = r;
            }
        }
    }

    let (n, m) = (ynn.rows(), ynn.cols());
    let mut data = Vec::with_capacity(n * m);
    for col in ynn.columns() {
        let inner = project_simplex(col, theta.max(0.0))?;
        data.extend(col.iter().zip(&inner.projected).map(|(y, p)| y - p));
    }
    Ok(OracleResult {
        x: DenseMatrix::from_col_major(n, m, data)?,
        theta,
        residual,
        iterations,
    })
}

/// Largest shape accepted by [`project_small_kkt`].
pub const KKT_MAX_DIM: usize = 6;

/// Exhaustive search over the case structure of the optimality conditions.
///
/// Every column is either dropped or keeps its `s` largest entries
/// (`1 <= s <= n`). Each configuration fixes `theta` and the caps by a linear
/// equation; configurations violating any optimality inequality are
/// discarded and the closest feasible point to `Y` is returned.
pub fn project_small_kkt(ynn: &DenseMatrix, c: f64) -> Result<OracleResult> {
    let (n, m) = (ynn.rows(), ynn.cols());
    if n > KKT_MAX_DIM || m > KKT_MAX_DIM {
        return Err(Error::TooLarge {
            rows: n,
            cols: m,
            limit: KKT_MAX_DIM,
        });
    }
    check_input(ynn, c)?;

    let mut sorted = Vec::with_capacity(m);
    let mut prefix = Vec::with_capacity(m);
    for col in ynn.columns() {
        let mut z = col.to_vec();
        z.sort_unstable_by(|a, b| b.total_cmp(a));
        let p: Vec<f64> = z
            .iter()
            .scan(0.0, |acc, &v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        sorted.push(z);
        prefix.push(p);
    }
    let scale = 1.0 + ynn.as_slice().iter().fold(0.0_f64, |a, &v| a.max(v)) * n as f64;
    let eps = 1e-12 * scale;

    let total = (n + 1).pow(m as u32);
    let mut choice = vec![0usize; m];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for code in 0..total {
        let mut r = code;
        for ch in choice.iter_mut() {
            *ch = r % (n + 1);
            r /= n + 1;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &s) in choice.iter().enumerate() {
            if s > 0 {
                num += prefix[j][s - 1] / s as f64;
                den += 1.0 / s as f64;
            }
        }
        if den == 0.0 {
            continue;
        }
        let theta = (num - c) / den;
        if theta < -eps {
            continue;
        }
        let mut caps = vec![0.0; m];
        let feasible = choice.iter().enumerate().all(|(j, &s)| {
            if s == 0 {
                return prefix[j][n - 1] <= theta + eps;
            }
            let mu = (prefix[j][s - 1] - theta) / s as f64;
            caps[j] = mu.max(0.0);
            mu >= -eps && sorted[j][s - 1] >= mu - eps && (s == n || sorted[j][s] <= mu + eps)
        });
        if !feasible {
            continue;
        }
        let dist: f64 = ynn
            .columns()
            .zip(&caps)
            .map(|(col, &mu)| col.iter().map(|&y| (y - y.min(mu)).powi(2)).sum::<f64>())
            .sum();
        if best.as_ref().map_or(true, |(d, _, _)| dist < *d) {
            best = Some((dist, theta, caps));
        }
    }
    let (_, theta, caps) = best.ok_or_else(|| {
        Error::Precondition("no configuration satisfies the optimality conditions".into())
    })?;
    let data = ynn
        .columns()
        .zip(&caps)
        .flat_map(|(col, &mu)| col.iter().map(move |&y| y.min(mu)))
        .collect();
    Ok(OracleResult {
        x: DenseMatrix::from_col_major(n, m, data)?,
        theta: theta.max(0.0),
        residual: (caps.iter().sum::<f64>() - c).abs(),
        iterations: total,
    })
}
