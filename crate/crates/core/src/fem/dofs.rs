use alloc::vec::Vec;

use crate::mesh::{Point, TriangleMesh};

/// Degree-of-freedom numbering for P2 vector velocity and P0 pressure.
///
/// Scalar P2 nodes are the mesh vertices (`0..V`) followed by the edge
/// midpoints (`V..V+E`). Vector velocity DOFs interleave the two components,
/// `2·node + component`. Pressure DOF `t` is the indicator of triangle `t`.
#[derive(Debug, Clone)]
pub struct DofLayout {
    n_vertices: usize,
    n_triangles: usize,
    element_nodes: Vec<[usize; 6]>,
    node_coords: Vec<Point>,
    boundary_node: Vec<bool>,
    velocity_boundary_dofs: Vec<usize>,
}

impl DofLayout {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let nv = mesh.n_vertices();
        let element_nodes = mesh
            .triangles()
            .iter()
            .zip(mesh.triangle_edges())
            .map(|(t, e)| [t[0], t[1], t[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();
        let mut node_coords = mesh.vertices().to_vec();
        node_coords.extend((0..mesh.n_edges()).map(|e| mesh.edge_midpoint(e)));
        let mut boundary_node = mesh.boundary_vertex_flags().to_vec();
        boundary_node.extend_from_slice(mesh.boundary_edge_flags());
        let velocity_boundary_dofs = boundary_node
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .flat_map(|(node, _)| [2 * node, 2 * node + 1])
            .collect();
        Self {
            n_vertices: nv,
            n_triangles: mesh.n_triangles(),
            element_nodes,
            node_coords,
            boundary_node,
            velocity_boundary_dofs,
        }
    }

    /// Scalar P2 node count, `V + E`.
    pub fn n_velocity_scalar(&self) -> usize {
        self.node_coords.len()
    }

    /// Vector velocity DOF count, `2(V + E)`.
    pub fn n_velocity(&self) -> usize {
        2 * self.node_coords.len()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Scalar node indices of triangle `t` in local order.
    pub fn element_nodes(&self, t: usize) -> [usize; 6] {
        self.element_nodes[t]
    }

    /// Vector DOFs of triangle `t`, interleaved `(x₀, y₀, x₁, y₁, …)`.
    pub fn element_velocity_dofs(&self, t: usize) -> [usize; 12] {
        let nodes = self.element_nodes[t];
        core::array::from_fn(|k| 2 * nodes[k / 2] + k % 2)
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.boundary_node[node]
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.n_velocity_scalar()).filter(|&n| self.boundary_node[n]).collect()
    }

    /// Sorted vector DOFs lying on ∂Ω.
    pub fn velocity_boundary_dofs(&self) -> &[usize] {
        &self.velocity_boundary_dofs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_structured_meshes() {
        let layout = DofLayout::new(&TriangleMesh::build_structured(4).unwrap());
        assert_eq!(layout.n_velocity_scalar(), 81);
        assert_eq!(layout.n_velocity(), 162);
        assert_eq!(layout.n_pressure(), 32);
        assert_eq!(layout.boundary_nodes().len(), 32);
        assert_eq!(layout.velocity_boundary_dofs().len(), 64);

        let layout = DofLayout::new(&TriangleMesh::build_structured(1).unwrap());
        assert_eq!(layout.n_velocity_scalar(), 9);
    }

    #[test]
    fn boundary_dofs_lie_on_boundary() {
        let layout = DofLayout::new(&TriangleMesh::build_structured(5).unwrap());
        for (node, p) in layout.node_coords().iter().enumerate() {
            let on = p.iter().any(|&c| c.abs() < 1e-14 || (c - 1.0).abs() < 1e-14);
            assert_eq!(on, layout.is_boundary_node(node));
        }
        for &dof in layout.velocity_boundary_dofs() {
            assert!(layout.is_boundary_node(dof / 2));
        }
    }

    #[test]
    fn element_maps_cover_every_node_without_gaps() {
        let mesh = TriangleMesh::build_structured(3).unwrap();
        let layout = DofLayout::new(&mesh);
        let mut seen = alloc::vec![false; layout.n_velocity_scalar()];
        for t in 0..mesh.n_triangles() {
            let nodes = layout.element_nodes(t);
            let corners = mesh.corners(t);
            for (k, &node) in nodes.iter().enumerate() {
                seen[node] = true;
                // the node sits at its Lagrange point
                let lam = crate::fem::P2_NODES[k];
                let p = mesh.point_at(t, lam);
                let q = layout.node_coords()[node];
                assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
                let _ = corners;
            }
            let dofs = layout.element_velocity_dofs(t);
            for k in 0..6 {
                assert_eq!(dofs[2 * k], 2 * nodes[k]);
                assert_eq!(dofs[2 * k + 1], 2 * nodes[k] + 1);
            }
        }
        assert!(seen.iter().all(|&s| s));
    }
}
