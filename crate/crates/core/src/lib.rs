//! Finite element solvers for the generalized Burgers'-Huxley equation with
//! a weakly singular memory term,
//!
//! ```text
//! u_t - nu Lap u + alpha u^delta (u_x + u_y) - beta u (1 - u^delta)(u^delta - gamma)
//!     - eta int_0^t K(t - s) Lap u(s) ds = f
//! ```
//!
//! on rectangles, discretized with Crouzeix-Raviart elements or symmetric
//! interior penalty DG in space and backward Euler with Newton's method in
//! time. The memory integral uses product-integration weights; an optional
//! Caputo derivative of order in (0, 1) can be added.
//!
//! Start with [`solver::Problem`] and [`solver::run`], or
//! [`mms::convergence_study`] for manufactured-solution studies. The
//! `gbhe` binary wraps the same functionality behind a TOML configuration
//! (see [`config`]).

pub mod cli;
pub mod config;
pub mod cr;
pub mod dg;
pub mod error;
pub mod forms;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod vtk;

pub use error::{Error, Result};
