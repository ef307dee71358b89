use crate::matrix::DenseMatrix;

use super::{recover_solution, ProjectionOptions, ProjectionOutput, ThetaState};

/// Builds every breakpoint, sorts them, and scans forward.
///
/// With column `j` sorted decreasingly into `z` and prefix sums `s`, keeping
/// `i` entries stops being optimal once theta exceeds `s_i - i * z_{i+1}`;
/// the column drops out entirely once theta reaches its total `s_n`. Those
/// `n * m` values form a total order along which acceptance is monotone.
pub(super) fn run(y: &DenseMatrix, c: f64, opts: &ProjectionOptions) -> ProjectionOutput {
    let (n, m) = (y.rows(), y.cols());

    let mut prefix = vec![0.0; n * m];
    let mut breakpoints: Vec<(f64, u32, u32)> = Vec::with_capacity(n * m);
    let mut sorted = vec![0.0; n];
    for (j, col) in y.columns().enumerate() {
        sorted.copy_from_slice(col);
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let s = &mut prefix[j * n..(j + 1) * n];
        let mut acc = 0.0;
        for (si, &z) in s.iter_mut().zip(&sorted) {
            acc += z;
            *si = acc;
        }
        for i in 1..n {
            breakpoints.push((s[i - 1] - i as f64 * sorted[i], j as u32, i as u32));
        }
        breakpoints.push((s[n - 1], j as u32, n as u32));
    }
    breakpoints.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

    let mut state = ThetaState::new(n, m, c);
    for j in 0..m {
        state.activate(j, prefix[j * n], 1);
    }
    let mut theta = state
        .update_theta()
        .expect("every column starts active");
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(theta);
    }

    let mut max_drift: Option<f64> = None;
    let mut crossed = 0usize;
    for &(b, j, i) in &breakpoints {
        if !(theta > b) {
            break;
        }
        let (j, i) = (j as usize, i as usize);
        if i == n {
            if state.active_count() == 1 && state.is_active(j) {
                break;
            }
            if state.is_active(j) {
                state.deactivate(j);
            }
        } else if state.is_active(j) && i + 1 > state.count(j) {
            // Rounding can swap equal breakpoints of one column; only grow.
            state.set_column(j, prefix[j * n + i], i + 1);
        }
        crossed += 1;
        theta = state.update_theta().expect("at least one active column");
        if opts.trace {
            trace.push(theta);
        }
        if opts.verify && crossed % m == 0 {
            let d = state.drift();
            max_drift = Some(max_drift.map_or(d, |x: f64| x.max(d)));
        }
    }
    if opts.verify {
        let d = state.drift();
        max_drift = Some(max_drift.map_or(d, |x: f64| x.max(d)));
    }
    state.resync();
    let theta = state.update_theta().expect("at least one active column");
    // Inputs on the boundary up to rounding can give a tiny negative value.
    let theta = theta.max(0.0);

    let mut out = recover_solution(y, theta, &state);
    out.stats.k = crossed;
    out.stats.j = n * m - crossed;
    out.stats.outer_iterations = 1;
    out.stats.max_drift = max_drift;
    out.trace = trace;
    out
}
