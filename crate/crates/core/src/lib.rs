//! Semi-smooth Newton methods for the piecewise linear system `x⁺ + T x = b`
//! and for nonnegatively constrained convex quadratic programs.
//!
//! - [`linalg`]: dense LU, spectral norms, symmetric Jacobi eigensolver.
//! - [`pwls`]: the Newton iteration for `x⁺ + T x = b` together with its
//!   oracles (contraction fixed point, sign-pattern enumeration) and
//!   hypothesis checks.
//! - [`qp`]: the QP form `[Q − I] x⁺ + x = −b̃`, KKT/LCP residuals and
//!   projection onto simplicial cones.
//! - [`gen`]: seeded instance generators with planted solutions.

pub mod error;
pub mod gen;
pub mod linalg;
mod newton;
pub mod pwls;
pub mod qp;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LuFactors};
pub use newton::{Cycle, SignPattern, SolveReport, SolveStatus, SolverOptions, Stopping};
pub use pwls::PwlsProblem;
pub use qp::{ConeInstance, QpProblem};
