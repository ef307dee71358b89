//! Exact Euclidean projection onto the l1,inf norm ball.
//!
//! The crate provides three exact projection algorithms (see
//! [`projection::Algorithm`]), the l-inf,1 proximity operator, two
//! independent reference solvers in [`oracle`], and a benchmark harness in
//! [`bench`] that emits CSV.
//!
//! ```
//! use l1inf::{project_ball_l1inf, Algorithm, DenseMatrix};
//!
//! let y = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
//! let p = project_ball_l1inf(&y, 1.0, Algorithm::InverseTotalOrder).unwrap();
//! assert_eq!(p.theta, 0.5);
//! assert_eq!(p.x.get(0, 0), 0.5);
//! ```

pub mod bench;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod projection;
pub mod simplex;

pub use error::{Error, Result};
pub use matrix::{
    norm_l1_inf, norm_linf_l1, sign_decompose, sparsity_report, DenseMatrix, SignPattern,
    SparsityReport,
};
pub use projection::{
    inverse_total_order_projection, naive_projection, project_ball_l1inf,
    project_ball_l1inf_with, project_nonnegative, prox_linf_l1, recover_solution,
    total_order_projection, Algorithm, ProjectionOptions, ProjectionOutput, ThetaState, WorkStats,
};
pub use simplex::{project_simplex, SimplexResult};
