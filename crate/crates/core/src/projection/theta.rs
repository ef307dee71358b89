//! Threshold bookkeeping shared by the three projection algorithms.
//!
//! For a set of active columns where column `j` keeps its `k_j` largest
//! entries (summing to `S_j`), the common threshold is
//!
//! ```text
//! theta = (sum_j a_j S_j / k_j - C) / (sum_j a_j / k_j)
//! ```
//!
//! and the column caps are `mu_j = max(0, (S_j - theta) / k_j)`. The two sums
//! are kept as running accumulators so that a single transition (activate,
//! deactivate, grow or shrink one column) costs O(1).

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::{ProjectionOutput, WorkStats};

#[derive(Clone, Debug)]
pub struct ThetaState {
    radius: f64,
    rows: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
    active: Vec<bool>,
    num: f64,
    den: f64,
    active_count: usize,
    theta: f64,
}

impl ThetaState {
    /// All columns start inactive with the "never activated" sentinel count `n + 1`.
    pub fn new(rows: usize, cols: usize, radius: f64) -> Self {
        Self {
            radius,
            rows,
            sums: vec![0.0; cols],
            counts: vec![rows + 1; cols],
            active: vec![false; cols],
            num: 0.0,
            den: 0.0,
            active_count: 0,
            theta: 0.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cols(&self) -> usize {
        self.sums.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sum(&self, j: usize) -> f64 {
        self.sums[j]
    }

    pub fn count(&self, j: usize) -> usize {
        self.counts[j]
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.active[j]
    }

    /// `false` while column `j` still carries the sentinel count.
    pub fn was_activated(&self, j: usize) -> bool {
        self.counts[j] != self.rows + 1
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    /// Running `(sum_j a_j S_j / k_j, sum_j a_j / k_j)`.
    pub fn accumulators(&self) -> (f64, f64) {
        (self.num, self.den)
    }

    pub fn activate(&mut self, j: usize, sum: f64, count: usize) {
        debug_assert!(!self.active[j]);
        debug_assert!(count >= 1 && count <= self.rows);
        self.sums[j] = sum;
        self.counts[j] = count;
        self.active[j] = true;
        self.active_count += 1;
        let k = count as f64;
        self.num += sum / k;
        self.den += 1.0 / k;
    }

    pub fn deactivate(&mut self, j: usize) {
        debug_assert!(self.active[j]);
        let k = self.counts[j] as f64;
        self.num -= self.sums[j] / k;
        self.den -= 1.0 / k;
        self.active[j] = false;
        self.active_count -= 1;
    }

    /// Replaces the selection of an active column.
    pub fn set_column(&mut self, j: usize, sum: f64, count: usize) {
        debug_assert!(self.active[j]);
        debug_assert!(count >= 1 && count <= self.rows);
        let (old_s, old_k) = (self.sums[j], self.counts[j] as f64);
        let k = count as f64;
        self.num += sum / k - old_s / old_k;
        self.den += 1.0 / k - 1.0 / old_k;
        self.sums[j] = sum;
        self.counts[j] = count;
    }

    /// Adds one more entry to the selection of column `j`.
    pub fn grow(&mut self, j: usize, value: f64) {
        let (s, k) = (self.sums[j] + value, self.counts[j] + 1);
        self.set_column(j, s, k);
    }

    /// Drops `value` (the smallest selected entry) from column `j`.
    pub fn shrink(&mut self, j: usize, value: f64) {
        debug_assert!(self.counts[j] >= 2);
        let (s, k) = (self.sums[j] - value, self.counts[j] - 1);
        self.set_column(j, s, k);
    }

    /// `theta = (num - C) / den`; fails when no column is active.
    pub fn update_theta(&mut self) -> Result<f64> {
        if self.active_count == 0 {
            return Err(Error::NoActiveColumns);
        }
        self.theta = (self.num - self.radius) / self.den;
        Ok(self.theta)
    }

    /// Accumulators recomputed from `(S, k, a)`.
    pub fn recompute(&self) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.sums.len() {
            if self.active[j] {
                let k = self.counts[j] as f64;
                num += self.sums[j] / k;
                den += 1.0 / k;
            }
        }
        (num, den)
    }

    /// Largest relative gap between the running and recomputed accumulators.
    pub fn drift(&self) -> f64 {
        let (num, den) = self.recompute();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        if self.active_count == 0 {
            return self.num.abs().max(self.den.abs());
        }
        rel(self.num, num).max(rel(self.den, den))
    }

    /// Replaces the running accumulators with freshly recomputed ones.
    pub fn resync(&mut self) {
        let (num, den) = self.recompute();
        self.num = num;
        self.den = den;
    }

    /// Column cap `mu_j`; zero for inactive columns.
    pub fn mu(&self, j: usize) -> f64 {
        if self.active[j] {
            ((self.sums[j] - self.theta) / self.counts[j] as f64).max(0.0)
        } else {
            0.0
        }
    }
}

/// Builds `X_ij = min(Y_ij, mu_j)` from a converged state.
pub fn recover_solution(ynn: &DenseMatrix, theta: f64, state: &ThetaState) -> ProjectionOutput {
    let (n, m) = (ynn.rows(), ynn.cols());
    let mut mu = Vec::with_capacity(m);
    let mut active = Vec::with_capacity(m);
    let mut data = Vec::with_capacity(n * m);
    for (j, col) in ynn.columns().enumerate() {
        let cap = if state.is_active(j) {
            ((state.sum(j) - theta) / state.count(j) as f64).max(0.0)
        } else {
            0.0
        };
        mu.push(cap);
        active.push(cap > 0.0);
        if cap > 0.0 {
            data.extend(col.iter().map(|&v| v.min(cap)));
        } else {
            data.resize(data.len() + n, 0.0);
        }
    }
    ProjectionOutput {
        x: DenseMatrix::from_parts_unchecked(n, m, data),
        theta,
        mu,
        active,
        stats: WorkStats::default(),
        trace: Vec::new(),
    }
}
