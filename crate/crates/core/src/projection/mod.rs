//! Projection onto the l1,inf ball and the l-inf,1 proximity operator.
//!
//! Signed inputs are reduced to the nonnegative case: the projection of `Y`
//! is `sign(Y) * P(|Y|)` where `P` projects onto the nonnegative part of the
//! ball. Three exact algorithms solve the nonnegative problem:
//!
//! * [`Algorithm::Naive`]: repeated per-column simplex projections.
//! * [`Algorithm::TotalOrder`]: sort every breakpoint, then scan forward.
//! * [`Algorithm::InverseTotalOrder`]: walk the breakpoint order backward
//!   with lazily built per-column heaps. Cost `O(nm + J log(nm))`.
//!
//! All three share [`ThetaState`] and end with [`recover_solution`].

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::matrix::{norm_l1_inf, norm_linf_l1, sign_decompose, DenseMatrix};

mod inverse;
mod naive;
mod theta;
mod total_order;

pub use theta::{recover_solution, ThetaState};

/// Which exact algorithm solves the nonnegative subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Naive,
    TotalOrder,
    InverseTotalOrder,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::Naive,
        Algorithm::TotalOrder,
        Algorithm::InverseTotalOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::TotalOrder => "total-order",
            Algorithm::InverseTotalOrder => "inverse-total-order",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "naive" => Ok(Algorithm::Naive),
            "total-order" | "total" => Ok(Algorithm::TotalOrder),
            "inverse-total-order" | "inverse" | "proposed" => Ok(Algorithm::InverseTotalOrder),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected naive, total-order or inverse-total-order)"
            ))),
        }
    }
}

/// Work counters. `k + j` always equals `n * m`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WorkStats {
    /// Breakpoints at or below the stopping point, i.e. entries capped or zeroed.
    pub k: usize,
    /// Breakpoints above the stopping point; the backward walk visits only these.
    pub j: usize,
    pub heap_pops: usize,
    pub outer_iterations: usize,
    pub elapsed: Duration,
    /// Largest relative accumulator drift seen; only set in verification mode.
    pub max_drift: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProjectionOptions {
    /// Record every accepted threshold value in [`ProjectionOutput::trace`].
    pub trace: bool,
    /// Periodically compare the running accumulators against a recomputation.
    pub verify: bool,
}

#[derive(Clone, Debug)]
pub struct ProjectionOutput {
    pub x: DenseMatrix,
    pub theta: f64,
    /// Column caps; `mu_j = 0` exactly when column `j` of `x` is zero.
    pub mu: Vec<f64>,
    pub active: Vec<bool>,
    pub stats: WorkStats,
    /// Threshold after each accepted transition (empty unless tracing).
    pub trace: Vec<f64>,
}

/// Euclidean projection of `Y` onto `{X : ||X||_{1,inf} <= C}`.
pub fn project_ball_l1inf(y: &DenseMatrix, c: f64, algo: Algorithm) -> Result<ProjectionOutput> {
    project_ball_l1inf_with(y, c, algo, &ProjectionOptions::default())
}

pub fn project_ball_l1inf_with(
    y: &DenseMatrix,
    c: f64,
    algo: Algorithm,
    opts: &ProjectionOptions,
) -> Result<ProjectionOutput> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!(
            "radius must be finite and nonnegative, got {c}"
        )));
    }
    let start = Instant::now();
    let (n, m) = (y.rows(), y.cols());
    let norm = norm_l1_inf(y);

    let mut out = if norm <= c {
        ProjectionOutput {
            x: y.clone(),
            theta: 0.0,
            mu: y
                .columns()
                .map(|col| col.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
                .collect(),
            active: vec![true; m],
            stats: WorkStats {
                k: 0,
                j: n * m,
                ..WorkStats::default()
            },
            trace: Vec::new(),
        }
    } else if c == 0.0 {
        ProjectionOutput {
            x: DenseMatrix::from_parts_unchecked(n, m, vec![0.0; n * m]),
            // Smallest theta dominating every column.
            theta: norm_linf_l1(y),
            mu: vec![0.0; m],
            active: vec![false; m],
            stats: WorkStats {
                k: n * m,
                j: 0,
                ..WorkStats::default()
            },
            trace: Vec::new(),
        }
    } else {
        let (signs, magnitudes) = sign_decompose(y);
        let mut out = run(algo, &magnitudes, c, opts);
        out.x = signs.apply_unchecked(&out.x);
        out
    };
    out.stats.elapsed = start.elapsed();
    Ok(out)
}

/// Projects a nonnegative matrix lying strictly outside the ball.
pub fn project_nonnegative(
    ynn: &DenseMatrix,
    c: f64,
    algo: Algorithm,
    opts: &ProjectionOptions,
) -> Result<ProjectionOutput> {
    check_nonnegative_outside(ynn, c)?;
    let start = Instant::now();
    let mut out = run(algo, ynn, c, opts);
    out.stats.elapsed = start.elapsed();
    Ok(out)
}

/// Fixed-point iteration over per-column simplex projections.
pub fn naive_projection(ynn: &DenseMatrix, c: f64) -> Result<ProjectionOutput> {
    project_nonnegative(ynn, c, Algorithm::Naive, &ProjectionOptions::default())
}

/// Sorts all breakpoints, then accepts them in increasing order.
pub fn total_order_projection(ynn: &DenseMatrix, c: f64) -> Result<ProjectionOutput> {
    project_nonnegative(ynn, c, Algorithm::TotalOrder, &ProjectionOptions::default())
}

/// Walks the breakpoint order backward from the largest column sum.
pub fn inverse_total_order_projection(ynn: &DenseMatrix, c: f64) -> Result<ProjectionOutput> {
    project_nonnegative(
        ynn,
        c,
        Algorithm::InverseTotalOrder,
        &ProjectionOptions::default(),
    )
}

/// `prox_{C ||.||_{inf,1}}(Y) = Y - P_{B(C)}(Y)`.
pub fn prox_linf_l1(y: &DenseMatrix, c: f64) -> Result<DenseMatrix> {
    if !(c > 0.0) {
        return Err(Error::Precondition(format!(
            "prox weight must be positive, got {c}"
        )));
    }
    let p = project_ball_l1inf(y, c, Algorithm::InverseTotalOrder)?;
    y.sub(&p.x)
}

fn run(algo: Algorithm, ynn: &DenseMatrix, c: f64, opts: &ProjectionOptions) -> ProjectionOutput {
    match algo {
        Algorithm::Naive => naive::run(ynn, c, opts),
        Algorithm::TotalOrder => total_order::run(ynn, c, opts),
        Algorithm::InverseTotalOrder => inverse::run(ynn, c, opts),
    }
}

fn check_nonnegative_outside(ynn: &DenseMatrix, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Precondition(format!(
            "radius must be finite and positive, got {c}"
        )));
    }
    if let Some(idx) = ynn.as_slice().iter().position(|&v| v < 0.0) {
        return Err(Error::Precondition(format!(
            "entry ({}, {}) is negative",
            idx % ynn.rows(),
            idx / ynn.rows()
        )));
    }
    let norm = norm_l1_inf(ynn);
    if norm <= c {
        return Err(Error::Precondition(format!(
            "input already lies in the ball (norm {norm} <= radius {c})"
        )));
    }
    Ok(())
}

/// Counts breakpoints crossed by a converged state: every breakpoint of a
/// dropped column plus `k_j - 1` element breakpoints of an active one.
fn crossed_breakpoints(state: &ThetaState, rows: usize) -> usize {
    (0..state.cols())
        .map(|j| {
            if state.is_active(j) {
                state.count(j) - 1
            } else {
                rows
            }
        })
        .sum()
}
