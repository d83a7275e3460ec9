//! Slow, independent reference solvers for verifying the fast ones.
//!
//! Nothing here reuses the solver code paths: the oracle evaluates kernels,
//! factors matrices and builds its objectives on its own, using plain
//! `Vec<Vec<f64>>` arithmetic (Jacobi eigendecomposition, Gaussian
//! elimination) rather than the Cholesky-based precomputation of the
//! coordinate descent solver.
//!
//! * [`solve_primal_pg`] runs subgradient descent on the kernel primal in
//!   coefficient space. It is simple and monotone but only reaches about
//!   `1e-2` accuracy on nonsmooth problems.
//! * [`solve_primal`] solves the same primal to high accuracy with a
//!   primal-dual interior-point method on its slack-variable QP form. This
//!   is the oracle the equivalence checks compare against.
//! * [`solve_box_qp_pg`] is accelerated projected gradient for box
//!   constrained quadratics, used on the dual side.
//! * [`finite_diff_check`] compares an analytic gradient against central
//!   differences.

mod box_qp;
mod finite_diff;
pub mod linalg;
mod primal;

pub use box_qp::{box_qp_objective, esvr_dual_predictions, solve_box_qp_pg, solve_dual_box};
pub use finite_diff::{central_differences, finite_diff_check};
pub use primal::{
    oracle_gram, solve_primal, solve_primal_pg, PrimalProblem, PrimalSolution, PrimalTrace,
};
