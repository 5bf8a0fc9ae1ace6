//! Modified Newton method for dense unconstrained minimization.
//!
//! Each step solves `(γI + (1−γ)H)·d = −g` with `γ` chosen from the extreme
//! Hessian eigenvalues, which are estimated by conjugate gradients on the
//! unit sphere, then takes a weak Wolfe step along `d`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod direction;
pub mod exec;
pub mod linalg;
pub mod linesearch;
pub mod problems;
pub mod solver;
pub mod sphere;
pub mod suite;

pub use direction::{
    compute_direction, select_gamma, Blend, DirectionInfo, GammaCase, GammaParams,
};
pub use exec::Execution;
pub use linalg::{cholesky_factor, jacobi_eigs, LinalgError, SymMatrix};
pub use linesearch::{wolfe_search, LineSearchStatus, WolfeParams};
pub use problems::Problem;
pub use solver::{minimize, NormRule, SolveReport, SolveStatus, SolverConfig};
pub use sphere::{cg_extreme_eig, extreme_pair, EigConfig, EigEstimate, Extreme, PairConfig};
pub use suite::{run_suite, SuiteRow};
