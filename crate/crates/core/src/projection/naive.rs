use crate::matrix::DenseMatrix;
use crate::simplex::project_simplex_unchecked;

use super::{crossed_breakpoints, recover_solution, ProjectionOptions, ProjectionOutput, ThetaState};

/// Repeats {drop dominated columns, re-project every remaining column onto
/// the simplex of radius theta, recompute theta} until the selection stops
/// changing.
pub(super) fn run(y: &DenseMatrix, c: f64, opts: &ProjectionOptions) -> ProjectionOutput {
    let (n, m) = (y.rows(), y.cols());
    let col_sums: Vec<f64> = y.columns().map(|col| col.iter().sum()).collect();

    let mut state = ThetaState::new(n, m, c);
    for (j, col) in y.columns().enumerate() {
        let top = col.iter().fold(0.0_f64, |a, &v| a.max(v));
        state.activate(j, top, 1);
    }
    let mut theta = state
        .update_theta()
        .expect("every column starts active");
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(theta);
    }

    let mut iterations = 0;
    let mut max_drift: Option<f64> = None;
    // The selection only ever grows and columns only ever leave, so the loop
    // runs at most n * m times.
    loop {
        // Only reachable when ||Y|| exceeds C by rounding: theta is 0 and
        // keeping each column's maximum is the answer.
        if !(theta > 0.0) {
            break;
        }
        iterations += 1;
        let mut changed = false;
        for j in 0..m {
            if !state.is_active(j) {
                continue;
            }
            if col_sums[j] < theta {
                state.deactivate(j);
                changed = true;
                continue;
            }
            let col = y.column(j);
            let proj = project_simplex_unchecked(col, theta);
            let support: f64 = col.iter().filter(|&&v| v > proj.tau).sum();
            let count = proj.support_size;
            if count == 0 {
                state.deactivate(j);
                changed = true;
                continue;
            }
            if count != state.count(j) {
                changed = true;
            }
            state.set_column(j, support, count);
        }
        if opts.verify {
            let d = state.drift();
            max_drift = Some(max_drift.map_or(d, |x: f64| x.max(d)));
        }
        state.resync();
        theta = match state.update_theta() {
            Ok(t) => t,
            // Unreachable for inputs outside the ball; keep the last threshold.
            Err(_) => break,
        };
        if opts.trace {
            trace.push(theta);
        }
        if !changed || iterations > n * m + 1 {
            break;
        }
    }

    // Inputs on the boundary up to rounding can give a tiny negative value.
    let theta = theta.max(0.0);
    let mut out = recover_solution(y, theta, &state);
    let k = crossed_breakpoints(&state, n);
    out.stats.k = k;
    out.stats.j = n * m - k;
    out.stats.outer_iterations = iterations;
    out.stats.max_drift = max_drift;
    out.trace = trace;
    out
}
