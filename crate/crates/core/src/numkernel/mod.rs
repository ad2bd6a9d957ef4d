//! Sparse symmetric linear algebra: CSR storage, CG, MINRES and the two
//! pencil eigensolvers used by the cell problems.

mod cg;
mod eigen;
mod minres;
mod sparse;

pub use cg::{cg_solve, cg_solve_observed, CgStats, DEFAULT_LINEAR_TOL};
pub use eigen::{
    inverse_power, orient_and_check_sign, pencil_nearest, EigenConfig, EigenPair, DEFAULT_EIGEN_TOL, SIGN_SLACK,
};
pub use minres::{minres_solve, MinresStats};
pub use sparse::{axpy, dot, norm2, SparseSym};
