//! Newton conditional-gradient solver for constrained nonlinear systems
//! `F(x) = 0, x in C`, where `C` is a compact convex set with a cheap linear
//! minimization oracle.
//!
//! * [`linalg`]: dense LU and finite-difference Jacobians.
//! * [`oracle`]: feasible sets (box, simplex, ball) and the CondG pull-back.
//! * [`solver`]: the Newton-CondG outer loop.
//! * [`majorant`]: scalar majorant functions and convergence radii.
//! * [`problems`]: box-constrained benchmark catalog.
//! * [`bench`]: benchmark runner and CSV/table reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod linalg;
pub mod majorant;
pub mod oracle;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{fd_jacobian, lu_solve, Matrix};
pub use majorant::{MajorantModel, RadiusBundle};
pub use oracle::{condg, CondGResult, CondGStatus, FeasibleSet};
pub use problems::ProblemSpec;
pub use solver::{
    newton_step, solve, IterationRecord, NewtonStep, NonlinearSystem, SolveReport, SolveStatus,
    SolverConfig, ThetaSchedule,
};
