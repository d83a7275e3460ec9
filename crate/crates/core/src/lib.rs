//! Distance-weighted epsilon support vector regression.
//!
//! The model minimizes the classical epsilon-insensitive SVR objective plus
//! `lambda1` times the mean squared residual (the mean functional margin), so
//! the fit reflects the whole data distribution and not only the points on
//! the tube boundary. Two solvers are provided:
//!
//! * [`cd_solver`]: kernel dual coordinate descent for medium-sized problems;
//! * [`asgd_solver`]: averaged stochastic gradient descent for large linear
//!   problems.
//!
//! [`baselines`] holds a bias-augmented epsilon-SVR and ordinary least squares
//! for comparison, and [`oracle`] contains slow reference solvers used to
//! verify the fast ones. The bias is always absorbed into the model by
//! augmenting every input with a constant 1 (equivalently, adding 1 to every
//! kernel value).

pub mod asgd_solver;
pub mod baselines;
pub mod bench;
pub mod cd_solver;
pub mod cli;
pub mod data;
pub mod error;
pub mod kernels;
pub mod model_file;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
pub use nalgebra;
