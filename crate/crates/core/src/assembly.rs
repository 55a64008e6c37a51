//! Global assembly of the discrete forms.
//!
//! All velocity matrices (mass, stiffness, convection) are assembled from the
//! same element loop over all 6 × 6 node pairs and both components, so they
//! share one sparsity pattern; structural zeros are kept.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::fem::p2_values;
use crate::fem::{
    gauss_rule, DofLayout, ElementGeometry, QuadratureRule, BILINEAR_DEGREE, ERROR_DEGREE, TRILINEAR_DEGREE,
};
use crate::linalg::PressureNullspace;
use crate::mesh::TriangleMesh;
use crate::sparse::{CsrMatrix, TripletList};
use crate::{Error, Result};

type Local = [[f64; 6]; 6];

fn rule(degree: usize) -> QuadratureRule {
    gauss_rule(degree).expect("built-in quadrature degree")
}

/// `∫_K φ_a φ_b`
pub fn mass_element(geo: &ElementGeometry, rule: &QuadratureRule) -> Local {
    let mut m = [[0.0; 6]; 6];
    for (l, w) in rule.iter() {
        let phi = p2_values(l);
        let jw = 2.0 * geo.area * w;
        for a in 0..6 {
            for b in 0..6 {
                m[a][b] += jw * phi[a] * phi[b];
            }
        }
    }
    m
}

/// `∫_K ∇φ_a · ∇φ_b`
pub fn stiffness_element(geo: &ElementGeometry, rule: &QuadratureRule) -> Local {
    let mut k = [[0.0; 6]; 6];
    for (l, w) in rule.iter() {
        let g = geo.p2_gradients(l);
        let jw = 2.0 * geo.area * w;
        for a in 0..6 {
            for b in 0..6 {
                k[a][b] += jw * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    k
}

/// `∫_K ∂_c φ_a` for component `c`, laid out like the interleaved element
/// velocity DOFs.
pub fn divergence_element(geo: &ElementGeometry, rule: &QuadratureRule) -> [f64; 12] {
    let mut d = [0.0; 12];
    for (l, w) in rule.iter() {
        let g = geo.p2_gradients(l);
        let jw = 2.0 * geo.area * w;
        for a in 0..6 {
            d[2 * a] += jw * g[a][0];
            d[2 * a + 1] += jw * g[a][1];
        }
    }
    d
}

/// Skew-symmetrized convection with convecting field `w` (interleaved local
/// coefficients): `n_ab = ½∫ φ_a (w·∇φ_b) − ½∫ φ_b (w·∇φ_a)`, so that
/// `φᵀ N u = b(w, u, φ)` and `n_ab = −n_ba` exactly.
pub fn convection_element(geo: &ElementGeometry, rule: &QuadratureRule, w: &[f64; 12]) -> Local {
    let mut c = [[0.0; 6]; 6];
    for (l, wq) in rule.iter() {
        let phi = p2_values(l);
        let g = geo.p2_gradients(l);
        let mut wv = [0.0; 2];
        for a in 0..6 {
            wv[0] += w[2 * a] * phi[a];
            wv[1] += w[2 * a + 1] * phi[a];
        }
        let jw = 2.0 * geo.area * wq;
        let adv: [f64; 6] = core::array::from_fn(|b| wv[0] * g[b][0] + wv[1] * g[b][1]);
        for a in 0..6 {
            for b in 0..6 {
                c[a][b] += jw * phi[a] * adv[b];
            }
        }
    }
    let mut n = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in a + 1..6 {
            let v = 0.5 * (c[a][b] - c[b][a]);
            n[a][b] = v;
            n[b][a] = -v;
        }
    }
    n
}

fn assemble_vector_block(
    mesh: &TriangleMesh,
    layout: &DofLayout,
    kernel: impl Fn(&ElementGeometry) -> Local,
) -> CsrMatrix {
    let nt = mesh.n_triangles();
    let mut t = TripletList::with_capacity(72 * nt);
    for e in 0..nt {
        let geo = ElementGeometry::new(mesh.corners(e));
        let local = kernel(&geo);
        let nodes = layout.element_nodes(e);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..2 {
                    t.push(2 * nodes[a] + c, 2 * nodes[b] + c, local[a][b]);
                }
            }
        }
    }
    CsrMatrix::from_triplets(layout.n_velocity(), layout.n_velocity(), &t)
}

fn assemble_scalar_block(
    mesh: &TriangleMesh,
    layout: &DofLayout,
    kernel: impl Fn(&ElementGeometry) -> Local,
) -> CsrMatrix {
    let nt = mesh.n_triangles();
    let mut t = TripletList::with_capacity(36 * nt);
    for e in 0..nt {
        let geo = ElementGeometry::new(mesh.corners(e));
        let local = kernel(&geo);
        let nodes = layout.element_nodes(e);
        for a in 0..6 {
            for b in 0..6 {
                t.push(nodes[a], nodes[b], local[a][b]);
            }
        }
    }
    let n = layout.n_velocity_scalar();
    CsrMatrix::from_triplets(n, n, &t)
}

/// Vector velocity mass matrix `(u, v)`.
pub fn assemble_mass(mesh: &TriangleMesh, layout: &DofLayout) -> CsrMatrix {
    let q = rule(BILINEAR_DEGREE);
    assemble_vector_block(mesh, layout, |g| mass_element(g, &q))
}

/// Vector velocity stiffness matrix `a(u, v) = (∇u, ∇v)`.
pub fn assemble_stiffness(mesh: &TriangleMesh, layout: &DofLayout) -> CsrMatrix {
    let q = rule(BILINEAR_DEGREE);
    assemble_vector_block(mesh, layout, |g| stiffness_element(g, &q))
}

/// Scalar P2 mass matrix.
pub fn assemble_scalar_mass(mesh: &TriangleMesh, layout: &DofLayout) -> CsrMatrix {
    let q = rule(BILINEAR_DEGREE);
    assemble_scalar_block(mesh, layout, |g| mass_element(g, &q))
}

/// Scalar P2 stiffness matrix.
pub fn assemble_scalar_stiffness(mesh: &TriangleMesh, layout: &DofLayout) -> CsrMatrix {
    let q = rule(BILINEAR_DEGREE);
    assemble_scalar_block(mesh, layout, |g| stiffness_element(g, &q))
}

/// Pressure × velocity matrix with entries `∫_Ω q_K ∇·φ_v`.
pub fn assemble_divergence(mesh: &TriangleMesh, layout: &DofLayout) -> CsrMatrix {
    let q = rule(BILINEAR_DEGREE);
    let nt = mesh.n_triangles();
    let mut t = TripletList::with_capacity(12 * nt);
    for e in 0..nt {
        let geo = ElementGeometry::new(mesh.corners(e));
        let d = divergence_element(&geo, &q);
        for (k, &dof) in layout.element_velocity_dofs(e).iter().enumerate() {
            t.push(e, dof, d[k]);
        }
    }
    CsrMatrix::from_triplets(nt, layout.n_velocity(), &t)
}

fn check_velocity(w: &[f64], layout: &DofLayout) -> Result<()> {
    if w.len() != layout.n_velocity() {
        return Err(Error::Dimension(format!(
            "convecting field has length {}, expected {}",
            w.len(),
            layout.n_velocity()
        )));
    }
    Ok(())
}

fn local_coeffs(w: &[f64], layout: &DofLayout, e: usize) -> [f64; 12] {
    let dofs = layout.element_velocity_dofs(e);
    core::array::from_fn(|k| w[dofs[k]])
}

/// Convection matrix `N(w)` with `φᵀ N(w) u = b(w_h, u_h, φ_h)`.
pub fn assemble_convection(w: &[f64], mesh: &TriangleMesh, layout: &DofLayout) -> Result<CsrMatrix> {
    check_velocity(w, layout)?;
    let q = rule(TRILINEAR_DEGREE);
    let nt = mesh.n_triangles();
    let mut t = TripletList::with_capacity(72 * nt);
    for e in 0..nt {
        let geo = ElementGeometry::new(mesh.corners(e));
        let local = convection_element(&geo, &q, &local_coeffs(w, layout, e));
        let nodes = layout.element_nodes(e);
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..2 {
                    t.push(2 * nodes[a] + c, 2 * nodes[b] + c, local[a][b]);
                }
            }
        }
    }
    let n = layout.n_velocity();
    Ok(CsrMatrix::from_triplets(n, n, &t))
}

/// Re-assembles `N(w)` directly into the value array of a fixed velocity
/// pattern (the pattern of [`assemble_mass`]), skipping triplet compression.
#[derive(Debug, Clone)]
pub struct ConvectionAssembler {
    geometry: Vec<ElementGeometry>,
    /// per element, the value positions of the 36 node pairs for each component
    positions: Vec<[[usize; 2]; 36]>,
    nnz: usize,
    rule: QuadratureRule,
}

impl ConvectionAssembler {
    pub fn new(mesh: &TriangleMesh, layout: &DofLayout, pattern: &CsrMatrix) -> Result<Self> {
        if pattern.nrows() != layout.n_velocity() {
            return Err(Error::Dimension("pattern does not match the velocity layout".into()));
        }
        let mut positions = Vec::with_capacity(mesh.n_triangles());
        for e in 0..mesh.n_triangles() {
            let nodes = layout.element_nodes(e);
            let mut pos = [[0usize; 2]; 36];
            for a in 0..6 {
                for b in 0..6 {
                    for c in 0..2 {
                        pos[6 * a + b][c] = pattern
                            .position(2 * nodes[a] + c, 2 * nodes[b] + c)
                            .ok_or_else(|| Error::Dimension("pattern is missing a velocity coupling".into()))?;
                    }
                }
            }
            positions.push(pos);
        }
        Ok(Self {
            geometry: (0..mesh.n_triangles()).map(|e| ElementGeometry::new(mesh.corners(e))).collect(),
            positions,
            nnz: pattern.nnz(),
            rule: rule(TRILINEAR_DEGREE),
        })
    }

    /// Overwrite `values` with the entries of `N(w)`.
    pub fn fill(&self, w: &[f64], layout: &DofLayout, values: &mut [f64]) -> Result<()> {
        check_velocity(w, layout)?;
        assert_eq!(values.len(), self.nnz);
        values.iter_mut().for_each(|v| *v = 0.0);
        for (e, (geo, pos)) in self.geometry.iter().zip(&self.positions).enumerate() {
            let local = convection_element(geo, &self.rule, &local_coeffs(w, layout, e));
            for a in 0..6 {
                for b in 0..6 {
                    let v = local[a][b];
                    let [p0, p1] = pos[6 * a + b];
                    values[p0] += v;
                    values[p1] += v;
                }
            }
        }
        Ok(())
    }
}

/// Load vector `∫_Ω f(·, t) · φ_i` by degree-10 quadrature.
pub fn assemble_load(
    f: impl Fn(f64, f64, f64) -> [f64; 2],
    t: f64,
    mesh: &TriangleMesh,
    layout: &DofLayout,
) -> Vec<f64> {
    let q = rule(ERROR_DEGREE);
    let mut load = vec![0.0; layout.n_velocity()];
    for e in 0..mesh.n_triangles() {
        let area = mesh.area(e);
        let nodes = layout.element_nodes(e);
        for (l, w) in q.iter() {
            let p = mesh.point_at(e, l);
            let fv = f(p[0], p[1], t);
            let phi = p2_values(l);
            let jw = 2.0 * area * w;
            for a in 0..6 {
                load[2 * nodes[a]] += jw * fv[0] * phi[a];
                load[2 * nodes[a] + 1] += jw * fv[1] * phi[a];
            }
        }
    }
    load
}

#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub divergence: CsrMatrix,
}

impl AssembledForms {
    pub fn new(mesh: &TriangleMesh, layout: &DofLayout) -> Self {
        Self {
            mass: assemble_mass(mesh, layout),
            stiffness: assemble_stiffness(mesh, layout),
            divergence: assemble_divergence(mesh, layout),
        }
    }
}

/// Index maps between all velocity DOFs and the free (non-Dirichlet) ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletReduction {
    free: Vec<usize>,
    full_to_free: Vec<usize>,
}

impl DirichletReduction {
    /// `fixed` lists the DOFs carrying homogeneous Dirichlet values.
    pub fn new(n_full: usize, fixed: &[usize]) -> Result<Self> {
        let mut is_fixed = vec![false; n_full];
        for &d in fixed {
            if d >= n_full {
                return Err(Error::Dimension(format!("boundary DOF {d} out of range {n_full}")));
            }
            is_fixed[d] = true;
        }
        let free: Vec<usize> = (0..n_full).filter(|&i| !is_fixed[i]).collect();
        if free.is_empty() {
            return Err(Error::EmptySystem);
        }
        let mut full_to_free = vec![usize::MAX; n_full];
        for (k, &i) in free.iter().enumerate() {
            full_to_free[i] = k;
        }
        Ok(Self { free, full_to_free })
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_full(&self) -> usize {
        self.full_to_free.len()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Keep free rows and columns of a square velocity matrix. Also returns
    /// the source value position of every kept entry.
    pub fn restrict_square(&self, a: &CsrMatrix) -> (CsrMatrix, Vec<usize>) {
        a.select(&self.full_to_free, self.n_free(), &self.full_to_free, self.n_free())
    }

    /// Keep the free columns of a pressure × velocity matrix.
    pub fn restrict_columns(&self, b: &CsrMatrix) -> CsrMatrix {
        let rows: Vec<usize> = (0..b.nrows()).collect();
        b.select(&rows, b.nrows(), &self.full_to_free, self.n_free()).0
    }

    pub fn restrict_vector(&self, v: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| v[i]).collect()
    }

    /// Scatter free values into a full vector with zeros on the boundary.
    pub fn expand_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_full()];
        for (&i, &x) in self.free.iter().zip(v) {
            full[i] = x;
        }
        full
    }
}

/// Forms with the Dirichlet rows and columns removed.
#[derive(Debug, Clone)]
pub struct ReducedForms {
    pub reduction: DirichletReduction,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub divergence: CsrMatrix,
    /// Positions of the reduced entries in the full velocity pattern.
    pub positions: Vec<usize>,
}

/// Impose homogeneous Dirichlet conditions by symmetric elimination.
pub fn apply_dirichlet(forms: &AssembledForms, boundary_dofs: &[usize]) -> Result<ReducedForms> {
    let reduction = DirichletReduction::new(forms.mass.nrows(), boundary_dofs)?;
    let (mass, positions) = reduction.restrict_square(&forms.mass);
    let (stiffness, _) = reduction.restrict_square(&forms.stiffness);
    let divergence = reduction.restrict_columns(&forms.divergence);
    Ok(ReducedForms { reduction, mass, stiffness, divergence, positions })
}

/// A mesh with its DOF layout and all time-independent matrices.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: TriangleMesh,
    pub layout: DofLayout,
    pub forms: AssembledForms,
    pub reduced: ReducedForms,
}

impl Discretization {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        let layout = DofLayout::new(&mesh);
        let forms = AssembledForms::new(&mesh, &layout);
        let reduced = apply_dirichlet(&forms, layout.velocity_boundary_dofs())?;
        Ok(Self { mesh, layout, forms, reduced })
    }

    /// The structured `n × n` mesh of the unit square.
    pub fn structured(n: usize) -> Result<Self> {
        Self::new(TriangleMesh::build_structured(n)?)
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    /// Constants span the pressure kernel of the Dirichlet problem; the
    /// element areas weight the mean.
    pub fn pressure_nullspace(&self) -> PressureNullspace {
        PressureNullspace::Constant { weights: self.mesh.areas() }
    }
}
