//! Dense reference assembly for small meshes.
//!
//! Shares nothing with the core assembly except the mesh and the global node
//! numbering, which it recovers from node coordinates. Basis functions come
//! from inverting the Vandermonde matrix of the monomials at the reference
//! nodes, and every integral is exact: products are expanded as polynomials
//! in reference coordinates and integrated with `∫ ξ^i η^j = i! j! / (i+j+2)!`.

use std::collections::HashMap;

use kvflow_core::fem::DofLayout;
use kvflow_core::TriangleMesh;

const MAX_DEG: usize = 7;

/// Polynomial in the reference coordinates `(ξ, η)`, `c[i][j]` multiplies
/// `ξ^i η^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Poly {
    c: [[f64; MAX_DEG + 1]; MAX_DEG + 1],
}

impl Poly {
    fn zero() -> Self {
        Poly { c: [[0.0; MAX_DEG + 1]; MAX_DEG + 1] }
    }

    fn monomial(i: usize, j: usize, coef: f64) -> Self {
        let mut p = Self::zero();
        p.c[i][j] = coef;
        p
    }

    fn add_scaled(&self, s: f64, other: &Poly) -> Poly {
        let mut r = *self;
        for i in 0..=MAX_DEG {
            for j in 0..=MAX_DEG {
                r.c[i][j] += s * other.c[i][j];
            }
        }
        r
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut r = Self::zero();
        for i in 0..=MAX_DEG {
            for j in 0..=MAX_DEG {
                let a = self.c[i][j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..=MAX_DEG {
                    for l in 0..=MAX_DEG {
                        let b = other.c[k][l];
                        if b != 0.0 {
                            assert!(i + k <= MAX_DEG && j + l <= MAX_DEG, "oracle polynomial degree overflow");
                            r.c[i + k][j + l] += a * b;
                        }
                    }
                }
            }
        }
        r
    }

    fn d_xi(&self) -> Poly {
        let mut r = Self::zero();
        for i in 1..=MAX_DEG {
            for j in 0..=MAX_DEG {
                r.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        r
    }

    fn d_eta(&self) -> Poly {
        let mut r = Self::zero();
        for i in 0..=MAX_DEG {
            for j in 1..=MAX_DEG {
                r.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        r
    }

    /// Exact integral over the reference triangle.
    fn integrate(&self) -> f64 {
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let mut s = 0.0;
        for i in 0..=MAX_DEG {
            for j in 0..=MAX_DEG {
                if self.c[i][j] != 0.0 {
                    s += self.c[i][j] * fact(i) * fact(j) / fact(i + j + 2);
                }
            }
        }
        s
    }
}

/// Reference nodes: the vertices, then the midpoints opposite vertices 0, 1, 2.
const REF_NODES: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]];
const MONOMIALS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Nodal P2 basis on the reference triangle by Gauss–Jordan inversion of the
/// Vandermonde matrix.
fn reference_basis() -> [Poly; 6] {
    let mut v = [[0.0; 12]; 6];
    for (r, node) in REF_NODES.iter().enumerate() {
        for (m, &(i, j)) in MONOMIALS.iter().enumerate() {
            v[r][m] = node[0].powi(i as i32) * node[1].powi(j as i32);
        }
        v[r][6 + r] = 1.0;
    }
    for col in 0..6 {
        let piv = (col..6).max_by(|&a, &b| v[a][col].abs().total_cmp(&v[b][col].abs())).unwrap();
        v.swap(col, piv);
        let d = v[col][col];
        v[col].iter_mut().for_each(|x| *x /= d);
        for r in 0..6 {
            if r != col {
                let f = v[r][col];
                let pivot_row = v[col];
                v[r].iter_mut().zip(pivot_row).for_each(|(x, p)| *x -= f * p);
            }
        }
    }
    // V c_a = e_a, so coefficient m of basis a is (V⁻¹)[m][a]
    std::array::from_fn(|a| {
        MONOMIALS
            .iter()
            .enumerate()
            .fold(Poly::zero(), |acc, (m, &(i, j))| acc.add_scaled(v[m][6 + a], &Poly::monomial(i, j, 1.0)))
    })
}

struct Element {
    nodes: [usize; 6],
    det: f64,
    /// `∂(ξ, η)/∂(x, y)`
    jinv: [[f64; 2]; 2],
}

/// Dense matrices of the velocity/pressure forms.
pub struct DenseOracle {
    basis: [Poly; 6],
    elements: Vec<Element>,
    n_nodes: usize,
}

fn key(p: [f64; 2]) -> (i64, i64) {
    ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
}

impl DenseOracle {
    pub fn new(mesh: &TriangleMesh, layout: &DofLayout) -> Self {
        let lookup: HashMap<(i64, i64), usize> =
            layout.node_coords().iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let elements = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let [p0, p1, p2] = tri.map(|v| mesh.vertices()[v]);
                let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let jinv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
                let nodes = REF_NODES.map(|r| {
                    let x = [p0[0] + j[0][0] * r[0] + j[0][1] * r[1], p0[1] + j[1][0] * r[0] + j[1][1] * r[1]];
                    *lookup.get(&key(x)).expect("every P2 node has a global index")
                });
                Element { nodes, det, jinv }
            })
            .collect();
        DenseOracle { basis: reference_basis(), elements, n_nodes: layout.n_velocity_scalar() }
    }

    fn gradients(&self, e: &Element) -> [[Poly; 2]; 6] {
        std::array::from_fn(|a| {
            let (dxi, deta) = (self.basis[a].d_xi(), self.basis[a].d_eta());
            std::array::from_fn(|d| Poly::zero().add_scaled(e.jinv[0][d], &dxi).add_scaled(e.jinv[1][d], &deta))
        })
    }

    fn vector_block(&self, local: impl Fn(&Element, usize, usize) -> f64) -> Vec<Vec<f64>> {
        let n = 2 * self.n_nodes;
        let mut m = vec![vec![0.0; n]; n];
        for e in &self.elements {
            for a in 0..6 {
                for b in 0..6 {
                    let v = local(e, a, b);
                    for c in 0..2 {
                        m[2 * e.nodes[a] + c][2 * e.nodes[b] + c] += v;
                    }
                }
            }
        }
        m
    }

    pub fn mass(&self) -> Vec<Vec<f64>> {
        self.vector_block(|e, a, b| e.det.abs() * self.basis[a].mul(&self.basis[b]).integrate())
    }

    pub fn stiffness(&self) -> Vec<Vec<f64>> {
        self.vector_block(|e, a, b| {
            let g = self.gradients(e);
            e.det.abs() * (g[a][0].mul(&g[b][0]).integrate() + g[a][1].mul(&g[b][1]).integrate())
        })
    }

    /// `B[K][2i + c] = ∫_K ∂_c φ_i`
    pub fn divergence(&self) -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0; 2 * self.n_nodes]; self.elements.len()];
        for (k, e) in self.elements.iter().enumerate() {
            let g = self.gradients(e);
            for a in 0..6 {
                for c in 0..2 {
                    b[k][2 * e.nodes[a] + c] += e.det.abs() * g[a][c].integrate();
                }
            }
        }
        b
    }

    /// `N(w)[2i + c][2j + c] = ½∫ φ_i (w·∇φ_j) − ½∫ φ_j (w·∇φ_i)`
    pub fn convection(&self, w: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(w.len(), 2 * self.n_nodes);
        self.vector_block(|e, a, b| {
            let g = self.gradients(e);
            let wp: [Poly; 2] = std::array::from_fn(|c| {
                (0..6).fold(Poly::zero(), |acc, m| acc.add_scaled(w[2 * e.nodes[m] + c], &self.basis[m]))
            });
            let adv = |i: usize, j: usize| {
                let w_grad = wp[0].mul(&g[j][0]).add_scaled(1.0, &wp[1].mul(&g[j][1]));
                self.basis[i].mul(&w_grad).integrate()
            };
            0.5 * e.det.abs() * (adv(a, b) - adv(b, a))
        })
    }
}

/// Largest entrywise difference between two dense matrices of equal shape.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| {
            assert_eq!(r.len(), s.len());
            r.iter().zip(s).map(|(x, y)| (x - y).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest deviations of the sparse assembly from the dense oracle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleComparison {
    pub n: usize,
    pub mass: f64,
    pub stiffness: f64,
    pub divergence: f64,
    pub convection: f64,
}

impl OracleComparison {
    pub fn max(&self) -> f64 {
        self.mass.max(self.stiffness).max(self.divergence).max(self.convection)
    }
}

/// Compare every assembled form on the structured `n × n` mesh, with a
/// convecting field of seeded random coefficients in `[-1, 1]`.
pub fn compare_assembly(n: usize, seed: u64) -> kvflow_core::Result<OracleComparison> {
    use kvflow_core::assembly::{assemble_convection, assemble_divergence, assemble_mass, assemble_stiffness};
    use rand::{Rng, SeedableRng};

    let mesh = TriangleMesh::build_structured(n)?;
    let layout = DofLayout::new(&mesh);
    let oracle = DenseOracle::new(&mesh, &layout);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let w: Vec<f64> = (0..layout.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(OracleComparison {
        n,
        mass: max_abs_diff(&assemble_mass(&mesh, &layout).to_dense(), &oracle.mass()),
        stiffness: max_abs_diff(&assemble_stiffness(&mesh, &layout).to_dense(), &oracle.stiffness()),
        divergence: max_abs_diff(&assemble_divergence(&mesh, &layout).to_dense(), &oracle.divergence()),
        convection: max_abs_diff(&assemble_convection(&w, &mesh, &layout)?.to_dense(), &oracle.convection(&w)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_basis_is_nodal() {
        let basis = reference_basis();
        for (a, p) in basis.iter().enumerate() {
            for (r, node) in REF_NODES.iter().enumerate() {
                let mut v = 0.0;
                for i in 0..=MAX_DEG {
                    for j in 0..=MAX_DEG {
                        v += p.c[i][j] * node[0].powi(i as i32) * node[1].powi(j as i32);
                    }
                }
                assert!((v - f64::from(u8::from(a == r))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn oracle_mass_sums_to_area() {
        let mesh = TriangleMesh::build_structured(2).unwrap();
        let layout = DofLayout::new(&mesh);
        let m = DenseOracle::new(&mesh, &layout).mass();
        // Σ_ij M_ij over one component is ∫ 1 = 1
        let total: f64 = (0..m.len())
            .step_by(2)
            .flat_map(|i| (0..m.len()).step_by(2).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j])
            .sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_monomial_integrals() {
        assert!((Poly::monomial(0, 0, 1.0).integrate() - 0.5).abs() < 1e-16);
        assert!((Poly::monomial(1, 1, 1.0).integrate() - 1.0 / 24.0).abs() < 1e-16);
        assert!((Poly::monomial(2, 0, 1.0).integrate() - 1.0 / 12.0).abs() < 1e-16);
    }
}
