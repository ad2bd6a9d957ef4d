//! Boundary-fitted hexahedral meshes of the periodicity cell with a
//! centered spherical hole, and their tilings of the unit cube.
//!
//! The cell mesh is a spherified cube: six blocks, one per cube face, each
//! swept radially from the hole surface (t = 0) to the cube face (t = 1).
//! Nodes of one radial layer are indexed by the integer lattice points of
//! the cube surface, so neighbouring blocks share edge nodes by
//! construction and opposite cube faces carry matching node grids.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::unit_sphere_area;
use crate::fem::{self, Hex};
use crate::roots::bisect;

/// Format tag written into mesh dumps.
pub const MESH_JSON_VERSION: u32 = 1;

/// Treatment of the outer cube boundary of a cell mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterMode {
    /// Opposite faces identified (flat torus minus the hole).
    Periodic,
    /// Outer faces kept as a boundary on which data is prescribed.
    DirichletOuter,
}

/// Hole radius in cell coordinates for holes of physical radius `eps^a`.
pub fn cell_hole_radius(eps: f64, a: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension {n} < 3")));
    }
    if !(a > 1.0) {
        // a <= 1 would give holes at least as large as the cell.
        let radius = eps.powf(a - 1.0);
        if radius >= 0.5 || !radius.is_finite() {
            return Err(Error::HoleTooLarge { radius });
        }
        return Err(Error::InvalidParameter(format!("scaling exponent {a} must exceed 1")));
    }
    let radius = eps.powf(a - 1.0);
    if radius >= 0.5 {
        return Err(Error::HoleTooLarge { radius });
    }
    Ok(radius)
}

/// Critical hole-scaling exponent `n / (n - 2)`.
pub fn critical_exponent(n: usize) -> f64 {
    n as f64 / (n as f64 - 2.0)
}

/// Robin normalization: the total hole surface per unit volume,
/// `σ(∂H)/ε` with `∂H` the hole boundary in cell coordinates.
pub fn mu_coeff(eps: f64, n: usize, r_cell: f64) -> f64 {
    unit_sphere_area(n) * r_cell.powi(n as i32 - 1) / eps
}

/// Periodic identification of an outer node with its image one lattice
/// vector away along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodicPair {
    /// Node on the face at `-1/2` along `axis`.
    pub low: usize,
    /// Node on the face at `+1/2` along `axis`.
    pub high: usize,
    pub axis: usize,
}

/// Classification of nodes into degrees of freedom.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub node_to_dof: Vec<usize>,
    pub n_dofs: usize,
    /// Dofs carried by hole-surface nodes.
    pub hole: Vec<bool>,
    /// Dofs carried by outer-boundary nodes.
    pub outer: Vec<bool>,
}

impl DofMap {
    pub fn free_dofs(&self, constrained: &[bool]) -> Vec<usize> {
        (0..self.n_dofs).filter(|&d| !constrained[d]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CellMesh {
    pub dimension: usize,
    pub hole_radius: f64,
    pub level: u32,
    /// Number of hexahedra between the hole and the cube face.
    pub radial_layers: usize,
    /// Radial blend parameter of each node layer, `t[0] = 0`, `t[L] = 1`.
    pub layer_params: Vec<f64>,
    pub nodes: Vec<[f64; 3]>,
    pub hexes: Vec<[usize; 8]>,
    pub hole_faces: Vec<[usize; 4]>,
    pub outer_faces: Vec<[usize; 4]>,
    pub periodic_pairs: Vec<PeriodicPair>,
    pub outer_mode: OuterMode,
    /// Cube-surface lattice points in `[0, m]^3`, `m = 2^level`; node
    /// `layer * surface.len() + s` sits above lattice point `s`.
    surface: Vec<[usize; 3]>,
}

impl CellMesh {
    #[inline]
    pub fn subdivisions(&self) -> usize {
        1 << self.level
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_per_layer(&self) -> usize {
        self.surface.len()
    }

    pub fn node_layer(&self, node: usize) -> usize {
        node / self.surface.len()
    }

    /// Cube-surface lattice point above which `node` sits.
    pub fn node_lattice(&self, node: usize) -> [usize; 3] {
        self.surface[node % self.surface.len()]
    }

    pub fn is_hole_node(&self, node: usize) -> bool {
        self.node_layer(node) == 0
    }

    pub fn is_outer_node(&self, node: usize) -> bool {
        self.node_layer(node) == self.radial_layers
    }

    pub fn hex_coords(&self, h: usize) -> Hex {
        self.hexes[h].map(|i| self.nodes[i])
    }

    pub fn quad_coords(&self, q: &[usize; 4]) -> fem::Quad {
        q.map(|i| self.nodes[i])
    }

    /// Image of an outer node under the lattice translation along `axis`
    /// that maps one face onto its opposite. `None` for nodes that do not
    /// lie on either face normal to `axis`.
    pub fn periodic_image(&self, node: usize, axis: usize) -> Option<usize> {
        if !self.is_outer_node(node) {
            return None;
        }
        let m = self.subdivisions();
        let mut p = self.node_lattice(node);
        p[axis] = match p[axis] {
            0 => m,
            c if c == m => 0,
            _ => return None,
        };
        let s = self.surface.binary_search(&p).ok()?;
        Some(self.radial_layers * self.surface.len() + s)
    }

    /// Degrees of freedom: periodic classes for [`OuterMode::Periodic`],
    /// one dof per node otherwise.
    pub fn dof_map(&self) -> DofMap {
        let n = self.num_nodes();
        let node_to_dof = match self.outer_mode {
            OuterMode::DirichletOuter => (0..n).collect::<Vec<_>>(),
            OuterMode::Periodic => {
                let mut parent: Vec<usize> = (0..n).collect();
                fn find(parent: &mut [usize], mut x: usize) -> usize {
                    while parent[x] != x {
                        parent[x] = parent[parent[x]];
                        x = parent[x];
                    }
                    x
                }
                for p in &self.periodic_pairs {
                    let (a, b) = (find(&mut parent, p.low), find(&mut parent, p.high));
                    if a != b {
                        let (lo, hi) = (a.min(b), a.max(b));
                        parent[hi] = lo;
                    }
                }
                let mut dof_of_root = vec![usize::MAX; n];
                let mut next = 0;
                let mut map = vec![0; n];
                for i in 0..n {
                    let r = find(&mut parent, i);
                    if dof_of_root[r] == usize::MAX {
                        dof_of_root[r] = next;
                        next += 1;
                    }
                    map[i] = dof_of_root[r];
                }
                map
            }
        };
        let n_dofs = node_to_dof.iter().max().map_or(0, |m| m + 1);
        let mut hole = vec![false; n_dofs];
        let mut outer = vec![false; n_dofs];
        for i in 0..n {
            if self.is_hole_node(i) {
                hole[node_to_dof[i]] = true;
            }
            if self.is_outer_node(i) {
                outer[node_to_dof[i]] = true;
            }
        }
        DofMap { node_to_dof, n_dofs, hole, outer }
    }

    pub fn volume(&self) -> f64 {
        (0..self.hexes.len()).map(|h| fem::hex_volume(&self.hex_coords(h))).sum()
    }

    /// Total area of the bilinear patches on the hole surface.
    pub fn hole_area(&self) -> f64 {
        self.hole_faces.iter().map(|q| fem::quad_area(&self.quad_coords(q))).sum()
    }

    pub fn min_jacobian(&self) -> f64 {
        (0..self.hexes.len())
            .map(|h| fem::hex_min_det(&self.hex_coords(h)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Same geometry with a different outer treatment.
    pub fn with_outer_mode(&self, mode: OuterMode) -> CellMesh {
        CellMesh { outer_mode: mode, ..self.clone() }
    }

    pub fn to_json(&self) -> MeshJson {
        MeshJson {
            version: MESH_JSON_VERSION,
            kind: "cell",
            nodes: self.nodes.clone(),
            hexes: self.hexes.clone(),
            hole_faces: self.hole_faces.clone(),
            outer_faces: self.outer_faces.clone(),
            periodic_pairs: self.periodic_pairs.iter().map(|p| [p.low, p.high]).collect(),
        }
    }
}

/// Versioned mesh dump layout.
#[derive(Debug, Clone, Serialize)]
pub struct MeshJson {
    pub version: u32,
    pub kind: &'static str,
    pub nodes: Vec<[f64; 3]>,
    pub hexes: Vec<[usize; 8]>,
    pub hole_faces: Vec<[usize; 4]>,
    pub outer_faces: Vec<[usize; 4]>,
    pub periodic_pairs: Vec<[usize; 2]>,
}

/// Radial node parameters: `level + 2` layers, geometrically graded so the
/// layer touching the hole is about `r_cell / 2^level` thick (measured
/// against the face-center gap `1/2 - r_cell`).
fn radial_params(r_cell: f64, level: u32) -> Result<Vec<f64>> {
    let layers = level as usize + 2;
    let first = (r_cell / (1u64 << level) as f64) / (0.5 - r_cell);
    let ratio = if first >= 1.0 / layers as f64 {
        1.0
    } else {
        let total = |q: f64| first * (q.powi(layers as i32) - 1.0) / (q - 1.0) - 1.0;
        bisect(|q| Ok(total(q)), 1.0 + 1e-12, 1e3, 1e-14, 200)?.root
    };
    let mut t = Vec::with_capacity(layers + 1);
    t.push(0.0);
    let mut step = if ratio == 1.0 { 1.0 / layers as f64 } else { first };
    let mut acc = 0.0;
    for _ in 0..layers {
        acc += step;
        t.push(acc);
        step *= ratio;
    }
    // Pin the outer layer exactly on the cube.
    let last = *t.last().unwrap();
    t.iter_mut().for_each(|v| *v /= last);
    t[layers] = 1.0;
    Ok(t)
}

/// Cube coordinate of lattice index `k` in `0..=m`: face parameter
/// `u = 2k/m − 1` placed at `tan(πu/4)/2`, so that the radial projections
/// onto the sphere are equiangular. Symmetric under `k ↦ m − k`, which
/// keeps opposite faces matching.
fn cube_coordinate(k: usize, m: usize) -> f64 {
    if k == 0 {
        return -0.5;
    }
    if k == m {
        return 0.5;
    }
    let u = 2.0 * k as f64 / m as f64 - 1.0;
    0.5 * (std::f64::consts::FRAC_PI_4 * u).tan()
}

/// Lattice points on the surface of `[0, m]^3`, sorted lexicographically.
fn surface_lattice(m: usize) -> Vec<[usize; 3]> {
    let mut pts = Vec::with_capacity(6 * m * m + 2);
    for i in 0..=m {
        for j in 0..=m {
            for k in 0..=m {
                let on = [i, j, k].iter().any(|&c| c == 0 || c == m);
                if on {
                    pts.push([i, j, k]);
                }
            }
        }
    }
    pts
}

/// Surface quads of `[0, m]^3`, each as four lattice points in cyclic
/// order, grouped by cube face.
fn surface_quads(m: usize) -> Vec<[[usize; 3]; 4]> {
    let mut quads = Vec::with_capacity(6 * m * m);
    for axis in 0..3 {
        let (d1, d2) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, m] {
            for a in 0..m {
                for b in 0..m {
                    let corner = |da: usize, db: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[d1] = a + da;
                        p[d2] = b + db;
                        p
                    };
                    quads.push([corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]);
                }
            }
        }
    }
    quads
}

/// Spherified-cube mesh of `Y \ B(0, r_cell)`, `Y = (-1/2, 1/2)^3`.
pub fn build_cell_mesh(r_cell: f64, level: u32, outer_mode: OuterMode) -> Result<CellMesh> {
    if !(r_cell > 0.0 && r_cell < 0.5) {
        return Err(Error::InvalidParameter(format!("hole radius {r_cell} outside (0, 1/2)")));
    }
    if !(1..=8).contains(&level) {
        return Err(Error::InvalidParameter(format!("mesh level {level} outside 1..=8")));
    }
    let m = 1usize << level;
    let t = radial_params(r_cell, level)?;
    let layers = t.len() - 1;
    let surface = surface_lattice(m);
    let ns = surface.len();
    let index_of = |p: &[usize; 3]| surface.binary_search(p).expect("lattice point on surface");

    let mut nodes = Vec::with_capacity(ns * (layers + 1));
    for &tk in &t {
        for p in &surface {
            let c = p.map(|k| cube_coordinate(k, m));
            let len = fem::norm(c);
            let node = if tk == 1.0 {
                c
            } else {
                let s = r_cell / len;
                [
                    (1.0 - tk) * s * c[0] + tk * c[0],
                    (1.0 - tk) * s * c[1] + tk * c[1],
                    (1.0 - tk) * s * c[2] + tk * c[2],
                ]
            };
            nodes.push(node);
        }
    }

    let quads: Vec<[usize; 4]> = surface_quads(m).iter().map(|q| q.map(|p| index_of(&p))).collect();
    let mut hexes = Vec::with_capacity(quads.len() * layers);
    for q in &quads {
        for k in 0..layers {
            let lo = k * ns;
            let hi = (k + 1) * ns;
            let mut hex = [q[0] + lo, q[1] + lo, q[2] + lo, q[3] + lo, q[0] + hi, q[1] + hi, q[2] + hi, q[3] + hi];
            let coords: Hex = hex.map(|i| nodes[i]);
            if fem::hex_center_det(&coords) < 0.0 {
                hex.swap(1, 3);
                hex.swap(5, 7);
            }
            hexes.push(hex);
        }
    }
    let hole_faces = quads.to_vec();
    let outer_faces = quads.iter().map(|q| q.map(|s| s + layers * ns)).collect();

    let mut periodic_pairs = Vec::new();
    for (s, p) in surface.iter().enumerate() {
        for axis in 0..3 {
            if p[axis] == 0 {
                let mut img = *p;
                img[axis] = m;
                periodic_pairs.push(PeriodicPair {
                    low: layers * ns + s,
                    high: layers * ns + index_of(&img),
                    axis,
                });
            }
        }
    }

    let mesh = CellMesh {
        dimension: 3,
        hole_radius: r_cell,
        level,
        radial_layers: layers,
        layer_params: t,
        nodes,
        hexes,
        hole_faces,
        outer_faces,
        periodic_pairs,
        outer_mode,
        surface,
    };
    for h in 0..mesh.hexes.len() {
        let det = fem::hex_min_det(&mesh.hex_coords(h));
        if !(det > 0.0) {
            return Err(Error::MeshQuality(format!("hex {h} has Jacobian {det:e}")));
        }
    }
    Ok(mesh)
}

/// `N^3` scaled copies of a cell mesh tiling `(0, 1)^3`, glued on shared
/// cell faces.
#[derive(Debug, Clone)]
pub struct PerforatedMesh {
    pub cells_per_side: usize,
    pub eps: f64,
    pub cell: Arc<CellMesh>,
    pub nodes: Vec<[f64; 3]>,
    pub hexes: Vec<[usize; 8]>,
    /// Hole faces of every cell: the discrete `Γ_ε`.
    pub gamma_faces: Vec<[usize; 4]>,
    /// Nodes on `∂Ω`.
    pub dirichlet: Vec<bool>,
    /// Cell-mesh node each global node is a copy of.
    pub template_node: Vec<usize>,
}

impl PerforatedMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn hex_coords(&self, h: usize) -> Hex {
        self.hexes[h].map(|i| self.nodes[i])
    }

    pub fn quad_coords(&self, q: &[usize; 4]) -> fem::Quad {
        q.map(|i| self.nodes[i])
    }

    pub fn volume(&self) -> f64 {
        (0..self.hexes.len()).map(|h| fem::hex_volume(&self.hex_coords(h))).sum()
    }

    pub fn gamma_area(&self) -> f64 {
        self.gamma_faces.iter().map(|q| fem::quad_area(&self.quad_coords(q))).sum()
    }

    pub fn outer_dirichlet_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.dirichlet[i]).collect()
    }

    pub fn to_json(&self) -> MeshJson {
        MeshJson {
            version: MESH_JSON_VERSION,
            kind: "perforated",
            nodes: self.nodes.clone(),
            hexes: self.hexes.clone(),
            hole_faces: self.gamma_faces.clone(),
            outer_faces: Vec::new(),
            periodic_pairs: Vec::new(),
        }
    }
}

/// Tiles `(0, 1)^3` with `cells^3` copies of the cell mesh scaled by
/// `eps = 1/cells`.
pub fn build_perforated_mesh(cells: usize, r_cell: f64, level: u32) -> Result<PerforatedMesh> {
    if cells == 0 {
        return Err(Error::InvalidParameter("need at least one cell per side".into()));
    }
    let cell = Arc::new(build_cell_mesh(r_cell, level, OuterMode::DirichletOuter)?);
    tile_cell(cells, cell)
}

fn tile_cell(cells: usize, cell: Arc<CellMesh>) -> Result<PerforatedMesh> {
    const GLUE_TOL: f64 = 1e-10;
    let eps = 1.0 / cells as f64;
    let m = cell.subdivisions();
    let ncell = cell.num_nodes();
    let outer_span = cells * m;

    let mut nodes = Vec::new();
    let mut template_node = Vec::new();
    let mut dirichlet = Vec::new();
    let mut hexes = Vec::with_capacity(cell.hexes.len() * cells.pow(3));
    let mut gamma_faces = Vec::with_capacity(cell.hole_faces.len() * cells.pow(3));
    let mut shared: HashMap<[usize; 3], usize> = HashMap::new();
    let mut local_to_global = vec![0usize; ncell];

    for cz in 0..cells {
        for cy in 0..cells {
            for cx in 0..cells {
                let offset = [cx, cy, cz];
                for (i, y) in cell.nodes.iter().enumerate() {
                    let x = [
                        eps * (offset[0] as f64 + 0.5 + y[0]),
                        eps * (offset[1] as f64 + 0.5 + y[1]),
                        eps * (offset[2] as f64 + 0.5 + y[2]),
                    ];
                    if cell.is_outer_node(i) {
                        let p = cell.node_lattice(i);
                        let key = [offset[0] * m + p[0], offset[1] * m + p[1], offset[2] * m + p[2]];
                        if let Some(&g) = shared.get(&key) {
                            let other: [f64; 3] = nodes[g];
                            let d = fem::norm([x[0] - other[0], x[1] - other[1], x[2] - other[2]]);
                            if d > GLUE_TOL {
                                return Err(Error::MeshGlue { key, distance: d });
                            }
                            local_to_global[i] = g;
                        } else {
                            let g = nodes.len();
                            shared.insert(key, g);
                            nodes.push(x);
                            template_node.push(i);
                            dirichlet.push(key.iter().any(|&c| c == 0 || c == outer_span));
                            local_to_global[i] = g;
                        }
                    } else {
                        local_to_global[i] = nodes.len();
                        nodes.push(x);
                        template_node.push(i);
                        dirichlet.push(false);
                    }
                }
                hexes.extend(cell.hexes.iter().map(|h| h.map(|i| local_to_global[i])));
                gamma_faces.extend(cell.hole_faces.iter().map(|q| q.map(|i| local_to_global[i])));
            }
        }
    }

    Ok(PerforatedMesh {
        cells_per_side: cells,
        eps,
        cell,
        nodes,
        hexes,
        gamma_faces,
        dirichlet,
        template_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hole_radius_examples() {
        assert_eq!(cell_hole_radius(0.5, 3.0, 3).unwrap(), 0.25);
        assert_eq!(cell_hole_radius(0.25, 3.0, 3).unwrap(), 0.0625);
        assert!(matches!(cell_hole_radius(0.5, 1.0, 3), Err(Error::HoleTooLarge { .. })));
        assert!(matches!(cell_hole_radius(0.5, 2.0, 3), Err(Error::HoleTooLarge { .. })));
        assert!((cell_hole_radius(1.0 / 3.0, critical_exponent(3), 3).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn mu_examples() {
        assert!((mu_coeff(0.5, 3, 0.25) - PI / 2.0).abs() < 1e-14);
        assert!((mu_coeff(1.0, 3, 1.0) - 4.0 * PI).abs() < 1e-14);
        assert!((mu_coeff(0.25, 3, 0.0625) - PI / 16.0).abs() < 1e-15);
        // Critical scaling: eps^3 * sigma_3.
        for eps in [0.5, 1.0 / 3.0, 0.2] {
            let r = cell_hole_radius(eps, 3.0, 3).unwrap();
            assert!((mu_coeff(eps, 3, r) - 4.0 * PI * eps.powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_grading_hits_first_layer_target() {
        let t = radial_params(0.0625, 2).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[4], 1.0);
        let target = (0.0625 / 4.0) / (0.5 - 0.0625);
        assert!((t[1] - target).abs() < 1e-10);
        assert!(t.windows(3).all(|w| w[2] - w[1] >= w[1] - w[0] - 1e-15));
        // Large holes fall back to uniform layers.
        let u = radial_params(0.25, 2).unwrap();
        assert!((u[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn counts_and_exact_sphere_fit() {
        let mesh = build_cell_mesh(0.25, 2, OuterMode::Periodic).unwrap();
        let m = 4;
        assert_eq!(mesh.nodes_per_layer(), 6 * m * m + 2);
        assert_eq!(mesh.radial_layers, 4);
        assert_eq!(mesh.hexes.len(), 6 * m * m * 4);
        assert_eq!(mesh.hole_faces.len(), 6 * m * m);
        for q in &mesh.hole_faces {
            for &i in q {
                assert!((fem::norm(mesh.nodes[i]) - 0.25).abs() <= 1e-12);
            }
        }
        for q in &mesh.outer_faces {
            for &i in q {
                let x = mesh.nodes[i];
                assert!(x.iter().any(|c| (c.abs() - 0.5).abs() < 1e-15));
            }
        }
        assert!(mesh.min_jacobian() > 0.0);
    }

    #[test]
    fn geometry_close_to_analytic() {
        // Inscribed bilinear patches lose about 3.3% of the sphere area at
        // level 2 and 0.8% at level 3.
        let fine = build_cell_mesh(0.25, 3, OuterMode::Periodic).unwrap();
        let area = 4.0 * PI * 0.0625;
        assert!((fine.hole_area() - area).abs() / area < 0.02, "{}", fine.hole_area());
        let mesh = build_cell_mesh(0.25, 2, OuterMode::Periodic).unwrap();
        assert!(mesh.hole_area() < area);
        let vol = 1.0 - 4.0 / 3.0 * PI * 0.25f64.powi(3);
        assert!((mesh.volume() - vol).abs() / vol < 0.02, "{}", mesh.volume());
    }

    #[test]
    fn hole_area_converges_at_second_order() {
        let r = 0.25;
        let exact = 4.0 * PI * r * r;
        let errs: Vec<f64> = (1..=4)
            .map(|l| (build_cell_mesh(r, l, OuterMode::Periodic).unwrap().hole_area() - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "observed order {order} from {errs:?}");
        }
    }

    #[test]
    fn admissibility_boundary() {
        let mesh = build_cell_mesh(0.49, 1, OuterMode::Periodic).unwrap();
        assert!(mesh.min_jacobian() > 0.0);
        assert!(matches!(build_cell_mesh(0.5, 1, OuterMode::Periodic), Err(Error::InvalidParameter(_))));
        assert!(build_cell_mesh(0.25, 0, OuterMode::Periodic).is_err());
    }

    #[test]
    fn periodic_map_is_an_involution_on_outer_nodes() {
        let mesh = build_cell_mesh(0.2, 2, OuterMode::Periodic).unwrap();
        let mut paired = vec![false; mesh.num_nodes()];
        for p in &mesh.periodic_pairs {
            let a = mesh.nodes[p.low];
            let b = mesh.nodes[p.high];
            for r in 0..3 {
                let expect = if r == p.axis { 1.0 } else { 0.0 };
                assert!((b[r] - a[r] - expect).abs() < 1e-15);
            }
            assert_eq!(mesh.periodic_image(p.low, p.axis), Some(p.high));
            assert_eq!(mesh.periodic_image(p.high, p.axis), Some(p.low));
            paired[p.low] = true;
            paired[p.high] = true;
        }
        for i in 0..mesh.num_nodes() {
            let on_face = mesh.nodes[i].iter().any(|c| (c.abs() - 0.5).abs() < 1e-15);
            assert_eq!(paired[i], on_face && mesh.is_outer_node(i), "node {i}");
            for axis in 0..3 {
                if let Some(j) = mesh.periodic_image(i, axis) {
                    assert_eq!(mesh.periodic_image(j, axis), Some(i));
                }
            }
        }
    }

    #[test]
    fn periodic_dofs_collapse_faces() {
        let mesh = build_cell_mesh(0.25, 1, OuterMode::Periodic).unwrap();
        let dofs = mesh.dof_map();
        let m = 2;
        let per_layer = 6 * m * m + 2;
        // On the torus the outer cube surface has m^3 - (m-1)^3 classes.
        assert_eq!(dofs.n_dofs, per_layer * mesh.radial_layers + m * m * m - (m - 1).pow(3));
        let plain = mesh.with_outer_mode(OuterMode::DirichletOuter).dof_map();
        assert_eq!(plain.n_dofs, mesh.num_nodes());
    }

    #[test]
    fn perforated_counts() {
        let single = build_perforated_mesh(1, 0.25, 2).unwrap();
        assert_eq!(single.num_nodes(), single.cell.num_nodes());
        let pm = build_perforated_mesh(2, 0.25, 2).unwrap();
        assert_eq!(pm.gamma_faces.len(), 8 * pm.cell.hole_faces.len());
        let m = 4;
        let (n, l) = (2usize, pm.cell.radial_layers);
        let outer = (n * m + 1).pow(3) - (n * (m - 1)).pow(3);
        let interior = n.pow(3) * l * pm.cell.nodes_per_layer();
        assert_eq!(pm.num_nodes(), outer + interior);
    }

    #[test]
    fn perforated_has_no_duplicate_nodes() {
        let pm = build_perforated_mesh(2, 0.2, 1).unwrap();
        let mut keys: Vec<[i64; 3]> = pm.nodes.iter().map(|x| x.map(|c| (c * 1e9).round() as i64)).collect();
        keys.sort_unstable();
        let before = keys.len();
        keys.dedup();
        assert_eq!(keys.len(), before);
    }

    #[test]
    fn perforated_volume() {
        let pm = build_perforated_mesh(2, 0.25, 2).unwrap();
        let exact = 1.0 - 8.0 * 4.0 / 3.0 * PI * (0.5f64 * 0.25).powi(3);
        assert!((pm.volume() - exact).abs() / exact < 0.02);
        let dirichlet_ok = pm
            .nodes
            .iter()
            .zip(&pm.dirichlet)
            .all(|(x, &d)| d == x.iter().any(|&c| c.abs() < 1e-14 || (c - 1.0).abs() < 1e-14));
        assert!(dirichlet_ok);
    }

    #[test]
    fn single_cell_tiling_matches_cell_coordinates() {
        let cell = build_cell_mesh(0.25, 2, OuterMode::DirichletOuter).unwrap();
        let pm = build_perforated_mesh(1, 0.25, 2).unwrap();
        let shifted: Vec<[f64; 3]> = cell.nodes.iter().map(|y| y.map(|c| c + 0.5)).collect();
        assert_eq!(shifted.len(), pm.nodes.len());
        for (a, b) in shifted.iter().zip(&pm.nodes) {
            assert!(fem::norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]]) < 1e-15);
        }
    }

    #[test]
    fn json_dump_is_versioned() {
        let mesh = build_cell_mesh(0.25, 1, OuterMode::Periodic).unwrap();
        let v = serde_json::to_value(mesh.to_json()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["hexes"].as_array().unwrap().len(), mesh.hexes.len());
        assert_eq!(v["periodic_pairs"].as_array().unwrap().len(), mesh.periodic_pairs.len());
    }
}
