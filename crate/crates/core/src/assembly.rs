//! Q1 assembly of stiffness, volume mass and hole-surface mass forms, and
//! the constrained linear systems built from them.
//!
//! Element matrices may be computed in parallel, but they are always
//! scattered in element order so the assembled values do not depend on the
//! thread count.

use rayon::prelude::*;

use crate::cellmesh::{CellMesh, DofMap, PerforatedMesh};
use crate::error::{Error, Result};
use crate::fem::{self, Hex, Quad};
use crate::numkernel::SparseSym;

/// Assembled cell forms over the dofs of a cell mesh.
#[derive(Debug, Clone)]
pub struct FormSet {
    /// `∫ ∇u·∇v`
    pub a: SparseSym,
    /// `∫ u v`
    pub m: SparseSym,
    /// `∫_{∂H} u v`
    pub b: SparseSym,
    /// Discrete hole surface area `1ᵀB1`.
    pub s_h: f64,
    /// Discrete volume `1ᵀM1`.
    pub vol_h: f64,
    pub dofs: DofMap,
}

fn hex_pattern(hexes: &[[usize; 8]], node_to_dof: &[usize], ndofs: usize) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); ndofs];
    for h in hexes {
        for &i in h {
            let di = node_to_dof[i];
            rows[di].extend(h.iter().map(|&j| node_to_dof[j]));
        }
    }
    rows
}

/// Stiffness and mass over `hexes`, with nodes mapped to dofs.
pub fn assemble_volume(
    nodes: &[[f64; 3]],
    hexes: &[[usize; 8]],
    node_to_dof: &[usize],
    ndofs: usize,
) -> Result<(SparseSym, SparseSym)> {
    let local: Vec<Option<fem::ElementPair>> = hexes
        .par_iter()
        .map(|h| {
            let coords: Hex = h.map(|i| nodes[i]);
            fem::hex_stiffness_mass(&coords)
        })
        .collect();
    let pattern = hex_pattern(hexes, node_to_dof, ndofs);
    let mut a = SparseSym::from_pattern(ndofs, pattern.clone());
    let mut m = SparseSym::from_pattern(ndofs, pattern);
    for (e, (h, mats)) in hexes.iter().zip(local).enumerate() {
        let (ke, me) = mats.ok_or_else(|| Error::Assembly(format!("element {e} has a singular map")))?;
        for (p, &i) in h.iter().enumerate() {
            let di = node_to_dof[i];
            for (q, &j) in h.iter().enumerate() {
                let dj = node_to_dof[j];
                a.add(di, dj, ke[p][q]);
                m.add(di, dj, me[p][q]);
            }
        }
    }
    Ok((a, m))
}

/// Surface mass over bilinear patches.
pub fn assemble_surface(nodes: &[[f64; 3]], quads: &[[usize; 4]], node_to_dof: &[usize], ndofs: usize) -> SparseSym {
    let mut rows = vec![Vec::new(); ndofs];
    for q in quads {
        for &i in q {
            rows[node_to_dof[i]].extend(q.iter().map(|&j| node_to_dof[j]));
        }
    }
    let mut b = SparseSym::from_pattern(ndofs, rows);
    for q in quads {
        let coords: Quad = q.map(|i| nodes[i]);
        let mq = fem::quad_mass(&coords);
        for (p, &i) in q.iter().enumerate() {
            for (r, &j) in q.iter().enumerate() {
                b.add(node_to_dof[i], node_to_dof[j], mq[p][r]);
            }
        }
    }
    b
}

/// Load vector `∫ f φ_i` with 2×2×2 Gauss quadrature.
pub fn assemble_load<F>(nodes: &[[f64; 3]], hexes: &[[usize; 8]], ndofs: usize, f: &F) -> Result<Vec<f64>>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    let local: Vec<Result<[f64; 8]>> = hexes
        .par_iter()
        .map(|h| {
            let coords: Hex = h.map(|i| nodes[i]);
            let mut fe = [0.0; 8];
            for p in fem::hex_points(&coords) {
                let v = f(p.x);
                if !v.is_finite() {
                    return Err(Error::Load { point: p.x });
                }
                for a in 0..8 {
                    fe[a] += v * p.shape[a] * p.weight;
                }
            }
            Ok(fe)
        })
        .collect();
    let mut load = vec![0.0; ndofs];
    for (h, fe) in hexes.iter().zip(local) {
        let fe = fe?;
        for (a, &i) in h.iter().enumerate() {
            load[i] += fe[a];
        }
    }
    Ok(load)
}

/// Cell forms on a cell mesh; periodic identification follows the mesh's
/// outer mode.
pub fn assemble_cell_forms(mesh: &CellMesh) -> Result<FormSet> {
    let dofs = mesh.dof_map();
    let (a, m) = assemble_volume(&mesh.nodes, &mesh.hexes, &dofs.node_to_dof, dofs.n_dofs)?;
    let b = assemble_surface(&mesh.nodes, &mesh.hole_faces, &dofs.node_to_dof, dofs.n_dofs);
    let ones = vec![1.0; dofs.n_dofs];
    let s_h = b.quad_form(&ones);
    let vol_h = m.quad_form(&ones);
    if !(s_h > 0.0) || !(vol_h > 0.0 && vol_h < 1.0) {
        return Err(Error::Assembly(format!("degenerate measures: s_h = {s_h}, vol_h = {vol_h}")));
    }
    Ok(FormSet { a, m, b, s_h, vol_h, dofs })
}

/// Quadratic form of `v ↦ ⨍_{∂H} v² − κ ∫ v²`, i.e. `B/s_h − κM`.
pub fn constraint_form(forms: &FormSet, kappa: f64) -> SparseSym {
    forms.b.lin_comb(1.0 / forms.s_h, &forms.m, -kappa)
}

/// A symmetric system on the free dofs, with constrained dofs eliminated.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub k: SparseSym,
    pub rhs: Vec<f64>,
    /// Free dofs in ascending order.
    pub free: Vec<usize>,
    /// Full-length vector holding the prescribed values (zero on free dofs).
    pub prescribed: Vec<f64>,
}

impl LinearSystem {
    /// Eliminates the dofs flagged in `constrained`, moving their prescribed
    /// values to the right-hand side.
    pub fn eliminate(k_full: &SparseSym, rhs_full: &[f64], constrained: &[bool], values: &[f64]) -> Self {
        let n = k_full.dim();
        let free: Vec<usize> = (0..n).filter(|&i| !constrained[i]).collect();
        let mut prescribed = vec![0.0; n];
        for i in 0..n {
            if constrained[i] {
                prescribed[i] = values[i];
            }
        }
        let lift = k_full.mul_vec(&prescribed);
        let rhs = free.iter().map(|&i| rhs_full[i] - lift[i]).collect();
        LinearSystem { k: k_full.principal_submatrix(&free), rhs, free, prescribed }
    }

    /// Full-length vector from free-dof values.
    pub fn expand(&self, x_free: &[f64]) -> Vec<f64> {
        let mut out = self.prescribed.clone();
        for (&i, &v) in self.free.iter().zip(x_free) {
            out[i] = v;
        }
        out
    }
}

/// Forms of the perforated problem on the global node numbering.
#[derive(Debug, Clone)]
pub struct DomainForms {
    pub a: SparseSym,
    pub m: SparseSym,
    /// Surface mass on `Γ_ε`.
    pub b_gamma: SparseSym,
    pub load: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    /// `A + αM + (β/μ) B_Γ`.
    pub operator: SparseSym,
}

impl DomainForms {
    /// `½ uᵀKu − uᵀF` for a full-length `u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.operator.quad_form(u) - crate::numkernel::dot(u, &self.load)
    }
}

/// Weak form of `−Δu + αu = f` in `Ω_ε`, `∂_ν u + (β/μ) u = 0` on `Γ_ε`,
/// `u = 0` on `∂Ω`. Returns the forms and the system on the free nodes.
pub fn assemble_domain_system<F>(
    pmesh: &PerforatedMesh,
    alpha: f64,
    beta: f64,
    mu: f64,
    f: &F,
) -> Result<(DomainForms, LinearSystem)>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    if !(alpha >= 0.0) || !(beta >= 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("need alpha >= 0, beta >= 0, mu > 0 (got {alpha}, {beta}, {mu})")));
    }
    let n = pmesh.num_nodes();
    let identity: Vec<usize> = (0..n).collect();
    let (a, m) = assemble_volume(&pmesh.nodes, &pmesh.hexes, &identity, n)?;
    let b_gamma = assemble_surface(&pmesh.nodes, &pmesh.gamma_faces, &identity, n);
    let load = assemble_load(&pmesh.nodes, &pmesh.hexes, n, f)?;
    let operator = a.lin_comb(1.0, &m, alpha).lin_comb(1.0, &b_gamma, beta / mu);
    let system = LinearSystem::eliminate(&operator, &load, &pmesh.dirichlet, &vec![0.0; n]);
    Ok((DomainForms { a, m, b_gamma, load, alpha, beta, mu, operator }, system))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellmesh::{build_cell_mesh, build_perforated_mesh, OuterMode};
    use crate::numkernel::cg_solve;
    use std::f64::consts::PI;

    #[test]
    fn cell_forms_are_symmetric_and_consistent() {
        let mesh = build_cell_mesh(0.25, 2, OuterMode::Periodic).unwrap();
        let forms = assemble_cell_forms(&mesh).unwrap();
        assert!(forms.a.asymmetry() < 1e-12);
        assert!(forms.m.asymmetry() < 1e-12);
        assert!(forms.b.asymmetry() < 1e-12);
        assert!((forms.vol_h - mesh.volume()).abs() < 1e-12);
        assert!((forms.s_h - mesh.hole_area()).abs() < 1e-12);
        let fine = assemble_cell_forms(&build_cell_mesh(0.25, 3, OuterMode::Periodic).unwrap()).unwrap();
        assert!((fine.s_h - 4.0 * PI * 0.0625).abs() / (4.0 * PI * 0.0625) < 0.02);
        let ones = vec![1.0; forms.dofs.n_dofs];
        let a1 = forms.a.mul_vec(&ones);
        assert!(a1.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn surface_mass_lives_on_hole_dofs() {
        let mesh = build_cell_mesh(0.3, 1, OuterMode::Periodic).unwrap();
        let forms = assemble_cell_forms(&mesh).unwrap();
        for d in 0..forms.dofs.n_dofs {
            let (cols, vals) = forms.b.row(d);
            let nonzero = vals.iter().any(|v| *v != 0.0);
            assert_eq!(nonzero, forms.dofs.hole[d], "dof {d}");
            assert!(cols.iter().zip(vals).all(|(&c, &v)| v == 0.0 || forms.dofs.hole[c]));
        }
    }

    #[test]
    fn constraint_form_on_constants() {
        let mesh = build_cell_mesh(0.25, 1, OuterMode::Periodic).unwrap();
        let forms = assemble_cell_forms(&mesh).unwrap();
        let ones = vec![1.0; forms.dofs.n_dofs];
        for kappa in [0.5, 1.0, 2.0] {
            let g = constraint_form(&forms, kappa);
            assert!((g.quad_form(&ones) - (1.0 - kappa * forms.vol_h)).abs() < 1e-12);
        }
        let g0 = constraint_form(&forms, 0.0);
        assert!(g0.quad_form(&ones) > 0.0);
        let big = 2.0 / forms.vol_h;
        assert!(constraint_form(&forms, big).quad_form(&ones) < 0.0);
    }

    #[test]
    fn patch_test_linear_field() {
        // Without constraints, A applied to a linear field vanishes at
        // dofs whose support does not touch any boundary.
        let mesh = build_cell_mesh(0.25, 2, OuterMode::DirichletOuter).unwrap();
        let forms = assemble_cell_forms(&mesh).unwrap();
        let ell: Vec<f64> = mesh.nodes.iter().map(|x| 0.3 * x[0] - 1.2 * x[1] + 0.7 * x[2]).collect();
        let r = forms.a.mul_vec(&ell);
        for i in 0..mesh.num_nodes() {
            if !mesh.is_hole_node(i) && !mesh.is_outer_node(i) {
                assert!(r[i].abs() < 1e-8, "node {i}: {}", r[i]);
            }
        }
    }

    #[test]
    fn elimination_keeps_symmetry_and_definiteness() {
        let mesh = build_cell_mesh(0.25, 1, OuterMode::DirichletOuter).unwrap();
        let forms = assemble_cell_forms(&mesh).unwrap();
        let k = forms.a.lin_comb(1.0, &forms.m, 0.5);
        let sys = LinearSystem::eliminate(&k, &vec![1.0; k.dim()], &forms.dofs.outer, &vec![0.0; k.dim()]);
        assert!(sys.k.asymmetry() < 1e-14);
        let x = cg_solve(&sys.k, &sys.rhs, 1e-10).unwrap();
        assert!(sys.k.quad_form(&x) > 0.0);
    }

    #[test]
    fn domain_system_identities() {
        let pm = build_perforated_mesh(2, 0.25, 1).unwrap();
        let mu = crate::cellmesh::mu_coeff(0.5, 3, 0.25);
        let (forms, sys) = assemble_domain_system(&pm, 1.0, 4.0 * PI, mu, &|_| 1.0).unwrap();
        let x = cg_solve(&sys.k, &sys.rhs, 1e-12).unwrap();
        let u = sys.expand(&x);
        let energy = forms.energy(&u);
        assert!(energy < 0.0);
        let expect = -0.5 * crate::numkernel::dot(&u, &forms.load);
        assert!((energy - expect).abs() <= 1e-9 * expect.abs());

        let (neumann, _) = assemble_domain_system(&pm, 1.0, 0.0, mu, &|_| 1.0).unwrap();
        let am = forms.a.lin_comb(1.0, &forms.m, 1.0);
        let diff = neumann.operator.lin_comb(1.0, &am, -1.0);
        assert!(diff.to_dense().iter().flatten().all(|v| v.abs() < 1e-15));

        let (_, zero) = assemble_domain_system(&pm, 0.0, 1.0, mu, &|_| 0.0).unwrap();
        assert!(cg_solve(&zero.k, &zero.rhs, 1e-10).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bad_load_is_reported() {
        let pm = build_perforated_mesh(1, 0.25, 1).unwrap();
        let e = assemble_domain_system(&pm, 0.0, 1.0, 1.0, &|_| f64::NAN).unwrap_err();
        assert!(matches!(e, Error::Load { .. }));
    }
}
