//! Conforming triangulations of the unit square.
//!
//! Meshes are built as an `n × n` grid of squares, each split along its
//! lower-left to upper-right diagonal, and refined by midpoint subdivision.
//! Edges are stored as sorted vertex pairs in lexicographic order; local edge
//! `i` of a triangle is the edge opposite its local vertex `i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Tolerance for on-edge and on-boundary classification.
pub const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    h: f64,
    locator: BucketGrid,
}

impl TriangleMesh {
    /// `n × n` squares, each cut along the diagonal from its lower-left to its
    /// upper-right corner.
    pub fn build_structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDiscretization("structured mesh needs at least one cell per side".into()));
        }
        let stride = n + 1;
        let nf = n as f64;
        let mut vertices = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / nf, j as f64 / nf]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * stride + i;
                let v10 = v00 + 1;
                let v01 = v00 + stride;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_parts(vertices, triangles, 1.0 / nf)
    }

    /// Assemble connectivity for an arbitrary list of counter-clockwise
    /// triangles. `h` is recorded as the mesh size.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidDiscretization("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidDiscretization(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::InvalidDiscretization(format!(
                    "triangle {t} is not counter-clockwise (signed area {area:e})"
                )));
            }
        }

        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|tri| (0..3).map(move |i| sorted_pair(tri[(i + 1) % 3], tri[(i + 2) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut edge_use = vec![0u8; edges.len()];
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let key = sorted_pair(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                // every key was inserted above
                let e = edges.binary_search(&key).unwrap_or_else(|_| unreachable!());
                edge_use[e] = edge_use[e].saturating_add(1);
                *slot = e;
            }
            triangle_edges.push(local);
        }
        if let Some(e) = edge_use.iter().position(|&c| c > 2) {
            return Err(Error::InvalidDiscretization(format!("edge {e} is shared by more than two triangles")));
        }
        let boundary_edge: Vec<bool> = edge_use.iter().map(|&c| c == 1).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &[a, b]) in edges.iter().enumerate() {
            if boundary_edge[e] {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
        }

        let locator = BucketGrid::new(&vertices, &triangles);
        Ok(Self { vertices, triangles, edges, triangle_edges, boundary_vertex, boundary_edge, h, locator })
    }

    /// Split every triangle into four congruent children through its edge
    /// midpoints. Midpoint of edge `e` becomes vertex `V + e`.
    pub fn refine_uniform(&self) -> Self {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|&[a, b]| midpoint(self.vertices[a], self.vertices[b])));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (tri, te) in self.triangles.iter().zip(&self.triangle_edges) {
            let [a, b, c] = *tri;
            let [ma, mb, mc] = [nv + te[0], nv + te[1], nv + te[2]];
            triangles.push([a, mc, mb]);
            triangles.push([mc, b, ma]);
            triangles.push([mb, ma, c]);
            triangles.push([ma, mb, mc]);
        }
        Self::from_parts(vertices, triangles, self.h / 2.0).expect("midpoint refinement of a valid mesh is valid")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn boundary_edge_flags(&self) -> &[bool] {
        &self.boundary_edge
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Mesh size (cell width of the generating grid).
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn areas(&self) -> Vec<f64> {
        (0..self.n_triangles()).map(|t| self.area(t)).collect()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        midpoint(self.vertices[a], self.vertices[b])
    }

    /// Find the triangle containing `p` and its barycentric coordinates.
    ///
    /// Points on shared edges or vertices go to the lowest-index containing
    /// triangle. The returned coordinates are clamped to be nonnegative and
    /// renormalized to sum to one.
    pub fn locate_point(&self, p: Point) -> Result<(usize, [f64; 3])> {
        if !(p[0].is_finite() && p[1].is_finite()) || !self.locator.in_bounds(p) {
            return Err(Error::OutsideDomain { x: p[0], y: p[1] });
        }
        for &t in self.locator.candidates(p) {
            let lambda = barycentric(self.corners(t), p);
            if lambda.iter().all(|&l| l >= -GEOMETRY_TOL) {
                let mut clamped = lambda.map(|l| l.max(0.0));
                let sum: f64 = clamped.iter().sum();
                clamped.iter_mut().for_each(|l| *l /= sum);
                return Ok((t, clamped));
            }
        }
        Err(Error::OutsideDomain { x: p[0], y: p[1] })
    }

    /// Map barycentric coordinates on triangle `t` to a Cartesian point.
    pub fn point_at(&self, t: usize, lambda: [f64; 3]) -> Point {
        let [a, b, c] = self.corners(t);
        [lambda[0] * a[0] + lambda[1] * b[0] + lambda[2] * c[0], lambda[0] * a[1] + lambda[1] * b[1] + lambda[2] * c[1]]
    }
}

/// Twice-halved cross product: positive for counter-clockwise triangles.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn barycentric(corners: [Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = corners;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Uniform bucket grid over the mesh bounding box. Each bucket lists, in
/// ascending order, every triangle whose (slightly inflated) bounding box
/// overlaps it, so scanning a bucket returns the same triangle as scanning the
/// whole mesh.
#[derive(Debug, Clone)]
struct BucketGrid {
    lo: Point,
    hi: Point,
    cells: usize,
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl BucketGrid {
    fn new(vertices: &[Point], triangles: &[[usize; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let cells = (libm::sqrt(triangles.len() as f64 / 2.0) as usize).max(1);
        let mut grid = Self { lo, hi, cells, offsets: Vec::new(), items: Vec::new() };

        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (t, tri) in triangles.iter().enumerate() {
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for &v in tri {
                for d in 0..2 {
                    blo[d] = blo[d].min(vertices[v][d]);
                    bhi[d] = bhi[d].max(vertices[v][d]);
                }
            }
            let (i0, j0) = grid.cell_of([blo[0] - GEOMETRY_TOL, blo[1] - GEOMETRY_TOL]);
            let (i1, j1) = grid.cell_of([bhi[0] + GEOMETRY_TOL, bhi[1] + GEOMETRY_TOL]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * cells + i].push(t);
                }
            }
        }
        grid.offsets.push(0);
        for b in buckets {
            grid.items.extend(b);
            grid.offsets.push(grid.items.len());
        }
        grid
    }

    fn in_bounds(&self, p: Point) -> bool {
        (0..2).all(|d| p[d] >= self.lo[d] - GEOMETRY_TOL && p[d] <= self.hi[d] + GEOMETRY_TOL)
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let idx = |d: usize| {
            let width = self.hi[d] - self.lo[d];
            let s = libm::floor((p[d] - self.lo[d]) / width * self.cells as f64);
            if s <= 0.0 {
                0
            } else {
                (s as usize).min(self.cells - 1)
            }
        };
        (idx(0), idx(1))
    }

    fn candidates(&self, p: Point) -> &[usize] {
        let (i, j) = self.cell_of(p);
        let b = j * self.cells + i;
        &self.items[self.offsets[b]..self.offsets[b + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_boundary(p: Point) -> bool {
        p.iter().any(|&c| c.abs() < 1e-14 || (c - 1.0).abs() < 1e-14)
    }

    fn check_invariants(mesh: &TriangleMesh) {
        let v = mesh.n_vertices() as i64;
        let e = mesh.n_edges() as i64;
        let t = mesh.n_triangles() as i64;
        assert_eq!(v - e + t, 1, "Euler relation");
        let total: f64 = mesh.areas().iter().sum();
        assert!((total - 1.0).abs() < 1e-14, "area sum {total}");
        assert!(mesh.areas().iter().all(|&a| a > 0.0));
        let mut uses = vec![0; mesh.n_edges()];
        for te in mesh.triangle_edges() {
            for &edge in te {
                uses[edge] += 1;
            }
        }
        for (edge, &count) in uses.iter().enumerate() {
            let boundary = mesh.boundary_edge_flags()[edge];
            assert_eq!(count, if boundary { 1 } else { 2 });
        }
        for (vi, &flag) in mesh.boundary_vertex_flags().iter().enumerate() {
            assert_eq!(flag, on_boundary(mesh.vertices()[vi]), "vertex {vi}");
        }
        assert!(mesh.edges().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn smallest_structured_mesh() {
        let mesh = TriangleMesh::build_structured(1).unwrap();
        assert_eq!((mesh.n_vertices(), mesh.n_triangles(), mesh.n_edges()), (4, 2, 5));
        check_invariants(&mesh);
    }

    #[test]
    fn structured_counts() {
        let mesh = TriangleMesh::build_structured(4).unwrap();
        assert_eq!((mesh.n_vertices(), mesh.n_triangles(), mesh.n_edges()), (25, 32, 56));
        assert_eq!(mesh.h(), 0.25);
        for n in 1..=9 {
            let mesh = TriangleMesh::build_structured(n).unwrap();
            assert_eq!(mesh.n_edges(), (n + 1) * (n + 1) + 2 * n * n - 1);
            check_invariants(&mesh);
        }
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(TriangleMesh::build_structured(0), Err(Error::InvalidDiscretization(_))));
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(TriangleMesh::from_parts(v, vec![[0, 2, 1]], 1.0).is_err());
    }

    #[test]
    fn refinement_matches_finer_structured_mesh() {
        let coarse = TriangleMesh::build_structured(1).unwrap();
        let fine = coarse.refine_uniform();
        assert_eq!((fine.n_triangles(), fine.n_vertices()), (8, 9));
        check_invariants(&fine);

        for n in [1, 3, 4] {
            let refined = TriangleMesh::build_structured(n).unwrap().refine_uniform();
            let direct = TriangleMesh::build_structured(2 * n).unwrap();
            check_invariants(&refined);
            assert_eq!(refined.h(), direct.h());
            let sorted = |m: &TriangleMesh| {
                let mut pts = m.vertices().to_vec();
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts
            };
            let (a, b) = (sorted(&refined), sorted(&direct));
            assert_eq!(a.len(), b.len());
            for (p, q) in a.iter().zip(&b) {
                assert!((p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn refinement_keeps_boundary_vertices() {
        let coarse = TriangleMesh::build_structured(3).unwrap();
        let fine = coarse.refine_uniform();
        for (v, &flag) in coarse.boundary_vertex_flags().iter().enumerate() {
            // coarse vertices keep their indices
            assert!(!flag || fine.boundary_vertex_flags()[v]);
        }
    }

    #[test]
    fn locate_corner_and_centroids() {
        let mesh = TriangleMesh::build_structured(4).unwrap();
        let (t, lambda) = mesh.locate_point([0.0, 0.0]).unwrap();
        assert_eq!(t, 0);
        assert!(lambda.iter().any(|&l| (l - 1.0).abs() < 1e-12));
        for t in 0..mesh.n_triangles() {
            let (found, lambda) = mesh.locate_point(mesh.centroid(t)).unwrap();
            assert_eq!(found, t);
            for l in lambda {
                assert!((l - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shared_edge_goes_to_lowest_index() {
        let mesh = TriangleMesh::build_structured(2).unwrap();
        // on the diagonal shared by triangles 0 and 1
        let (t, _) = mesh.locate_point([0.2, 0.2]).unwrap();
        assert_eq!(t, 0);
        let (t, _) = mesh.locate_point([1.0, 1.0]).unwrap();
        assert_eq!(t, 6);
    }

    #[test]
    fn outside_points_rejected() {
        let mesh = TriangleMesh::build_structured(2).unwrap();
        assert!(matches!(mesh.locate_point([1.5, 0.5]), Err(Error::OutsideDomain { .. })));
        assert!(mesh.locate_point([-1e-6, 0.5]).is_err());
        assert!(mesh.locate_point([f64::NAN, 0.5]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn locate_round_trips(x in 0.0f64..=1.0, y in 0.0f64..=1.0, n in 1usize..7) {
            let mesh = TriangleMesh::build_structured(n).unwrap();
            let (t, lambda) = mesh.locate_point([x, y]).unwrap();
            proptest::prop_assert!(lambda.iter().all(|&l| l >= 0.0));
            proptest::prop_assert!((lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let q = mesh.point_at(t, lambda);
            proptest::prop_assert!((q[0] - x).abs() < 1e-12 && (q[1] - y).abs() < 1e-12);
        }
    }
}
