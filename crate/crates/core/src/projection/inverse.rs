//! Backward walk over the breakpoint order.
//!
//! Start above every breakpoint (no active column) and move down. Crossing a
//! column total activates that column with all `n` entries selected; crossing
//! an element breakpoint `S_k - k * z_min` drops the column's smallest
//! selected entry. The walk stops at the first breakpoint that lies at or
//! below the current threshold: the threshold of the current selection is
//! then the exact solution.
//!
//! Only the breakpoints above the solution are ever visited (`J` of them),
//! each costing one pop from a per-column min-heap and one update of the
//! column-level max-heap. Column heaps are built on activation, so columns
//! that end up zeroed are never heapified.

use std::cmp::{Ordering, Reverse};
use std::collections::binary_heap::{BinaryHeap, PeekMut};

use crate::matrix::DenseMatrix;

use super::{recover_solution, ProjectionOptions, ProjectionOutput, ThetaState};

/// `f64` ordered by `total_cmp`; inputs are finite.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub(super) fn run(y: &DenseMatrix, c: f64, opts: &ProjectionOptions) -> ProjectionOutput {
    let (n, m) = (y.rows(), y.cols());

    let sums: Vec<f64> = y.columns().map(|col| col.iter().sum()).collect();
    let mut order: BinaryHeap<(Key, usize)> = sums
        .iter()
        .enumerate()
        .map(|(j, &s)| (Key(s), j))
        .collect::<Vec<_>>()
        .into();
    let mut selected: Vec<BinaryHeap<Reverse<Key>>> = (0..m).map(|_| BinaryHeap::new()).collect();

    let mut state = ThetaState::new(n, m, c);
    let mut trace = Vec::new();
    let mut max_drift: Option<f64> = None;
    let mut crossed = 0usize;
    let mut pops = 0usize;

    while let Some(mut top) = order.peek_mut() {
        let (Key(b), j) = *top;
        if state.active_count() > 0 && state.theta() >= b {
            break;
        }
        if !state.was_activated(j) {
            state.activate(j, sums[j], n);
            selected[j] = y
                .column(j)
                .iter()
                .map(|&v| Reverse(Key(v)))
                .collect::<Vec<_>>()
                .into();
        } else {
            let Reverse(Key(smallest)) = selected[j].pop().expect("column heap holds k_j >= 2 entries");
            pops += 1;
            state.shrink(j, smallest);
        }
        let theta = state.update_theta().expect("column j is active");
        crossed += 1;
        if opts.trace {
            trace.push(theta);
        }
        if opts.verify && crossed % m == 0 {
            let d = state.drift();
            max_drift = Some(max_drift.map_or(d, |x: f64| x.max(d)));
        }

        let k = state.count(j);
        if k > 1 {
            let Reverse(Key(smallest)) = *selected[j].peek().expect("non-empty column heap");
            top.0 = Key(state.sum(j) - k as f64 * smallest);
        } else {
            // Only the breakpoint at 0 is left, and the solution is positive.
            PeekMut::pop(top);
        }
        pops += 1;
    }
    if opts.verify {
        let d = state.drift();
        max_drift = Some(max_drift.map_or(d, |x: f64| x.max(d)));
    }

    // The heaps now hold exactly the selected entries: refresh the running
    // sums from them and recompute the threshold without accumulated drift.
    for j in 0..m {
        if state.is_active(j) {
            let exact: f64 = selected[j].iter().map(|r| r.0 .0).sum();
            let k = state.count(j);
            state.set_column(j, exact, k);
        }
    }
    state.resync();
    let theta = state
        .update_theta()
        .expect("input outside the ball activates at least one column");
    // Inputs on the boundary up to rounding can give a tiny negative value.
    let theta = theta.max(0.0);

    let mut out = recover_solution(y, theta, &state);
    out.stats.j = crossed;
    out.stats.k = n * m - crossed;
    out.stats.heap_pops = pops;
    out.stats.outer_iterations = 1;
    out.stats.max_drift = max_drift;
    out.trace = trace;
    out
}
