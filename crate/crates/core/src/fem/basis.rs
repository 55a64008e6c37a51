use crate::mesh::Point;

/// Barycentric coordinates of the six P2 Lagrange nodes in local order:
/// three vertices, then the midpoints of the edges opposite vertices 0, 1, 2.
pub const P2_NODES: [[f64; 3]; 6] =
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// Partial derivatives `∂φ_i/∂λ_m`.
pub fn p2_barycentric_gradients(l: [f64; 3]) -> [[f64; 3]; 6] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
        [4.0 * l[1], 4.0 * l[0], 0.0],
    ]
}

pub fn p2_basis(l: [f64; 3]) -> ([f64; 6], [[f64; 3]; 6]) {
    (p2_values(l), p2_barycentric_gradients(l))
}

/// Affine data of one triangle: area and the constant gradients of its
/// barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(corners: [Point; 3]) -> Self {
        let [a, b, c] = corners;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grad_lambda = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        Self { area: 0.5 * det, grad_lambda }
    }

    /// Cartesian gradients of the six basis functions at `l`.
    pub fn p2_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let db = p2_barycentric_gradients(l);
        let g = &self.grad_lambda;
        db.map(|d| [d[0] * g[0][0] + d[1] * g[1][0] + d[2] * g[2][0], d[0] * g[0][1] + d[1] * g[1][1] + d[2] * g[2][1]])
    }
}
