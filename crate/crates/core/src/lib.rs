//! Numerical workbench for Laplace problems on periodically perforated
//! domains with Robin conditions normalized by the total hole surface.
//!
//! The pipeline runs bottom-up:
//!
//! - [`cellmesh`] builds boundary-fitted meshes of the unit cell minus a
//!   ball and tiles them into the perforated cube;
//! - [`assembly`] assembles the stiffness, volume-mass and hole-surface
//!   forms;
//! - [`numkernel`] holds CG, MINRES and the pencil eigensolvers;
//! - [`cellspec`] computes the four cell quantities and their ε²-rescaled
//!   limits;
//! - [`exterior`] provides closed forms and a radial oracle for the
//!   limiting exterior problems;
//! - [`strangeterm`] solves for `κ*(β)` and the strange term `βκ*(β)`;
//! - [`homog`] solves the perforated and homogenized problems and runs the
//!   convergence and regime studies;
//! - [`validate`] is the executable acceptance suite.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

/// Version of this crate, recorded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod assembly;
pub mod cellmesh;
pub mod cellspec;
pub mod error;
pub mod exterior;
pub mod fem;
pub mod homog;
pub mod numkernel;
pub mod roots;
pub mod strangeterm;
pub mod validate;

pub use assembly::{assemble_cell_forms, constraint_form, FormSet, LinearSystem};
pub use cellmesh::{build_cell_mesh, build_perforated_mesh, CellMesh, OuterMode, PerforatedMesh};
pub use error::{Error, Result};
pub use exterior::{lambda_star_ball, star_constants, StarConstants};
pub use numkernel::{EigenPair, SparseSym};
