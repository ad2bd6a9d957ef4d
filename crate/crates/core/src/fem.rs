//! Trilinear hexahedra and bilinear surface quads with tensor Gauss rules.

/// Reference-corner signs in the node order used throughout: the bottom
/// quad counter-clockwise, then the top quad.
pub const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const QUAD_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Two-point Gauss abscissae on [-1, 1]; both weights are 1.
pub const GAUSS2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

pub type Hex = [[f64; 3]; 8];
pub type Quad = [[f64; 3]; 4];

/// Values and reference gradients of the eight trilinear shape functions.
pub fn hex_shape(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 3]; 8];
    for (a, c) in HEX_CORNERS.iter().enumerate() {
        let fx = 1.0 + c[0] * xi[0];
        let fy = 1.0 + c[1] * xi[1];
        let fz = 1.0 + c[2] * xi[2];
        n[a] = 0.125 * fx * fy * fz;
        dn[a] = [0.125 * c[0] * fy * fz, 0.125 * fx * c[1] * fz, 0.125 * fx * fy * c[2]];
    }
    (n, dn)
}

/// Quadrature data at one point of a physical hexahedron.
#[derive(Debug, Clone, Copy)]
pub struct HexPoint {
    pub x: [f64; 3],
    pub shape: [f64; 8],
    /// Physical gradients of the shape functions.
    pub grad: [[f64; 3]; 8],
    pub det: f64,
    /// Gauss weight times Jacobian determinant.
    pub weight: f64,
}

pub fn hex_point(coords: &Hex, xi: [f64; 3], gauss_weight: f64) -> HexPoint {
    let (shape, dn) = hex_shape(xi);
    let mut jac = [[0.0; 3]; 3];
    let mut x = [0.0; 3];
    for a in 0..8 {
        for r in 0..3 {
            x[r] += shape[a] * coords[a][r];
            for c in 0..3 {
                jac[r][c] += coords[a][r] * dn[a][c];
            }
        }
    }
    let det = det3(&jac);
    let inv = inv3(&jac, det);
    let mut grad = [[0.0; 3]; 8];
    for a in 0..8 {
        // grad_x N = J^{-T} grad_xi N
        for r in 0..3 {
            grad[a][r] = inv[0][r] * dn[a][0] + inv[1][r] * dn[a][1] + inv[2][r] * dn[a][2];
        }
    }
    HexPoint { x, shape, grad, det, weight: gauss_weight * det }
}

/// The 2×2×2 Gauss points of a hexahedron.
pub fn hex_points(coords: &Hex) -> impl Iterator<Item = HexPoint> + '_ {
    (0..8).map(move |q| {
        let xi = [GAUSS2[q & 1], GAUSS2[(q >> 1) & 1], GAUSS2[(q >> 2) & 1]];
        hex_point(coords, xi, 1.0)
    })
}

pub fn hex_center_det(coords: &Hex) -> f64 {
    hex_point(coords, [0.0; 3], 1.0).det
}

/// Smallest Jacobian determinant over the Gauss points and the corners.
pub fn hex_min_det(coords: &Hex) -> f64 {
    let gauss = hex_points(coords).map(|p| p.det);
    let corners = HEX_CORNERS.iter().map(|c| hex_point(coords, *c, 1.0).det);
    gauss.chain(corners).fold(f64::INFINITY, f64::min)
}

/// Element stiffness and mass matrices.
pub type ElementPair = ([[f64; 8]; 8], [[f64; 8]; 8]);

/// Element stiffness and consistent mass with full Gauss quadrature.
/// Returns `None` if the map degenerates at a quadrature point.
pub fn hex_stiffness_mass(coords: &Hex) -> Option<ElementPair> {
    let mut ke = [[0.0; 8]; 8];
    let mut me = [[0.0; 8]; 8];
    for p in hex_points(coords) {
        if !(p.det > 0.0) {
            return None;
        }
        for a in 0..8 {
            for b in 0..8 {
                let g = p.grad[a][0] * p.grad[b][0] + p.grad[a][1] * p.grad[b][1] + p.grad[a][2] * p.grad[b][2];
                ke[a][b] += g * p.weight;
                me[a][b] += p.shape[a] * p.shape[b] * p.weight;
            }
        }
    }
    Some((ke, me))
}

pub fn hex_volume(coords: &Hex) -> f64 {
    hex_points(coords).map(|p| p.weight).sum()
}

/// Quadrature data at one point of a bilinear surface patch.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: [f64; 3],
    pub shape: [f64; 4],
    /// Gauss weight times the area element.
    pub weight: f64,
}

pub fn quad_points(coords: &Quad) -> impl Iterator<Item = QuadPoint> + '_ {
    (0..4).map(move |q| {
        let (s, t) = (GAUSS2[q & 1], GAUSS2[(q >> 1) & 1]);
        let mut shape = [0.0; 4];
        let mut ds = [[0.0; 2]; 4];
        for (a, c) in QUAD_CORNERS.iter().enumerate() {
            shape[a] = 0.25 * (1.0 + c[0] * s) * (1.0 + c[1] * t);
            ds[a] = [0.25 * c[0] * (1.0 + c[1] * t), 0.25 * (1.0 + c[0] * s) * c[1]];
        }
        let mut x = [0.0; 3];
        let mut xs = [0.0; 3];
        let mut xt = [0.0; 3];
        for a in 0..4 {
            for r in 0..3 {
                x[r] += shape[a] * coords[a][r];
                xs[r] += ds[a][0] * coords[a][r];
                xt[r] += ds[a][1] * coords[a][r];
            }
        }
        let area = norm(cross(xs, xt));
        QuadPoint { x, shape, weight: area }
    })
}

pub fn quad_mass(coords: &Quad) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for p in quad_points(coords) {
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += p.shape[a] * p.shape[b] * p.weight;
            }
        }
    }
    m
}

pub fn quad_area(coords: &Quad) -> f64 {
    quad_points(coords).map(|p| p.weight).sum()
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let d = 1.0 / det;
    [
        [
            (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * d,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * d,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * d,
        ],
        [
            (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * d,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * d,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * d,
        ],
        [
            (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * d,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * d,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * d,
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_hex(lx: f64, ly: f64, lz: f64) -> Hex {
        let mut h = [[0.0; 3]; 8];
        for (a, c) in HEX_CORNERS.iter().enumerate() {
            h[a] = [0.5 * (c[0] + 1.0) * lx, 0.5 * (c[1] + 1.0) * ly, 0.5 * (c[2] + 1.0) * lz];
        }
        h
    }

    #[test]
    fn reference_stiffness_rows_sum_to_zero() {
        let (ke, me) = hex_stiffness_mass(&box_hex(1.0, 1.0, 1.0)).unwrap();
        for a in 0..8 {
            assert!(ke[a].iter().sum::<f64>().abs() < 1e-12);
            for b in 0..8 {
                assert!((ke[a][b] - ke[b][a]).abs() < 1e-14);
            }
        }
        let total_mass: f64 = me.iter().flatten().sum();
        assert!((total_mass - 1.0).abs() < 1e-14);
        // Known unit-cube Q1 stiffness diagonal.
        assert!((ke[0][0] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn box_volume_and_face_area() {
        assert!((hex_volume(&box_hex(2.0, 3.0, 0.5)) - 3.0).abs() < 1e-13);
        let q = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 3.0, 0.0], [0.0, 3.0, 0.0]];
        assert!((quad_area(&q) - 6.0).abs() < 1e-13);
        let m: f64 = quad_mass(&q).iter().flatten().sum();
        assert!((m - 6.0).abs() < 1e-13);
    }

    #[test]
    fn linear_field_has_constant_gradient() {
        let mut h = box_hex(1.0, 2.0, 1.5);
        h[6][0] += 0.2;
        h[6][2] += 0.1;
        for p in hex_points(&h) {
            let mut g = [0.0; 3];
            for a in 0..8 {
                let val = 2.0 * h[a][0] - h[a][1] + 0.5 * h[a][2];
                for r in 0..3 {
                    g[r] += val * p.grad[a][r];
                }
            }
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12 && (g[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_hex_is_rejected() {
        let mut h = box_hex(1.0, 1.0, 1.0);
        h.swap(1, 3);
        h.swap(5, 7);
        assert!(hex_center_det(&h) < 0.0);
        assert!(hex_stiffness_mass(&h).is_none());
    }
}
