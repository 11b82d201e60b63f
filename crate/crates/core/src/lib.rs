#![doc = include_str!("../../../README.md")]
// NaN-aware comparisons are written as negated orderings on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bilinear;
pub mod compensated;
pub mod error;
pub mod iterations;
pub mod mmatrix;
pub mod models;
pub mod newton;
pub mod oracle;
pub mod problem;
pub mod positivity;
pub mod report;
pub mod solver;
pub mod unilateral;
pub mod bench;

pub use error::{QveError, Result};
pub use problem::QveProblem;
pub use report::{SolveOptions, SolveReport, Status};
pub use solver::Method;
