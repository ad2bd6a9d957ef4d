//! Fixtures shared by the criterion benches.

use robinhom_core::assembly::{assemble_cell_forms, FormSet};
use robinhom_core::cellmesh::{build_cell_mesh, CellMesh, OuterMode};

/// Periodic cell mesh and its forms at the critical radius for `eps`.
pub fn periodic_cell(eps: f64, level: u32) -> (CellMesh, FormSet) {
    let r = eps * eps;
    let mesh = build_cell_mesh(r, level, OuterMode::Periodic).expect("valid cell");
    let forms = assemble_cell_forms(&mesh).expect("assembles");
    (mesh, forms)
}
