//! Nodal interpolation into the P2 space and pointwise evaluation of discrete
//! fields.

use alloc::format;
use alloc::vec::Vec;

use super::basis::{p2_values, ElementGeometry};
use super::dofs::DofLayout;
use crate::mesh::{Point, TriangleMesh};
use crate::{Error, Result};

pub fn interpolate_scalar(layout: &DofLayout, f: impl Fn(Point) -> f64) -> Vec<f64> {
    layout.node_coords().iter().map(|&p| f(p)).collect()
}

pub fn interpolate_vector(layout: &DofLayout, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    layout.node_coords().iter().flat_map(|&p| f(p)).collect()
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("coefficient vector has length {got}, layout expects {want}")));
    }
    Ok(())
}

pub fn evaluate_scalar(coeffs: &[f64], mesh: &TriangleMesh, layout: &DofLayout, p: Point) -> Result<f64> {
    check_len(coeffs.len(), layout.n_velocity_scalar())?;
    let (t, l) = mesh.locate_point(p)?;
    let phi = p2_values(l);
    Ok(layout.element_nodes(t).iter().zip(phi).map(|(&n, v)| coeffs[n] * v).sum())
}

pub fn evaluate_vector(coeffs: &[f64], mesh: &TriangleMesh, layout: &DofLayout, p: Point) -> Result<[f64; 2]> {
    check_len(coeffs.len(), layout.n_velocity())?;
    let (t, l) = mesh.locate_point(p)?;
    Ok(vector_at(coeffs, layout, t, l))
}

/// Jacobian `[[∂u₁/∂x, ∂u₁/∂y], [∂u₂/∂x, ∂u₂/∂y]]` of a vector field.
pub fn evaluate_vector_gradient(
    coeffs: &[f64],
    mesh: &TriangleMesh,
    layout: &DofLayout,
    p: Point,
) -> Result<[[f64; 2]; 2]> {
    check_len(coeffs.len(), layout.n_velocity())?;
    let (t, l) = mesh.locate_point(p)?;
    let geo = ElementGeometry::new(mesh.corners(t));
    Ok(vector_gradient_at(coeffs, layout, &geo, t, l))
}

pub fn evaluate_pressure(coeffs: &[f64], mesh: &TriangleMesh, p: Point) -> Result<f64> {
    check_len(coeffs.len(), mesh.n_triangles())?;
    let (t, _) = mesh.locate_point(p)?;
    Ok(coeffs[t])
}

pub fn vector_at(coeffs: &[f64], layout: &DofLayout, t: usize, l: [f64; 3]) -> [f64; 2] {
    let phi = p2_values(l);
    let mut u = [0.0; 2];
    for (&n, v) in layout.element_nodes(t).iter().zip(phi) {
        u[0] += coeffs[2 * n] * v;
        u[1] += coeffs[2 * n + 1] * v;
    }
    u
}

pub fn vector_gradient_at(
    coeffs: &[f64],
    layout: &DofLayout,
    geo: &ElementGeometry,
    t: usize,
    l: [f64; 3],
) -> [[f64; 2]; 2] {
    let grads = geo.p2_gradients(l);
    let mut j = [[0.0; 2]; 2];
    for (&n, g) in layout.element_nodes(t).iter().zip(grads) {
        for c in 0..2 {
            j[c][0] += coeffs[2 * n + c] * g[0];
            j[c][1] += coeffs[2 * n + c] * g[1];
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn setup(n: usize) -> (TriangleMesh, DofLayout) {
        let mesh = TriangleMesh::build_structured(n).unwrap();
        let layout = DofLayout::new(&mesh);
        (mesh, layout)
    }

    #[test]
    fn constant_reproduced() {
        let (mesh, layout) = setup(3);
        let c = interpolate_scalar(&layout, |_| 1.0);
        for p in [[0.0, 0.0], [0.3, 0.71], [1.0, 0.5]] {
            assert!((evaluate_scalar(&c, &mesh, &layout, p).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratics_reproduced_at_random_points() {
        let (mesh, layout) = setup(4);
        let q = |p: Point| 0.3 + p[0] - 2.0 * p[1] + p[0] * p[0] - 0.7 * p[0] * p[1] + 1.5 * p[1] * p[1];
        let sq = interpolate_scalar(&layout, |p| p[0] * p[0]);
        let cq = interpolate_vector(&layout, |p| [q(p), -q(p) + p[1] * p[1]]);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let p = [rng.gen::<f64>(), rng.gen::<f64>()];
            let v = evaluate_scalar(&sq, &mesh, &layout, p).unwrap();
            assert!((v - p[0] * p[0]).abs() < 1e-13);
            let u = evaluate_vector(&cq, &mesh, &layout, p).unwrap();
            assert!((u[0] - q(p)).abs() < 1e-13);
            assert!((u[1] + q(p) - p[1] * p[1]).abs() < 1e-13);
            let g = evaluate_vector_gradient(&cq, &mesh, &layout, p).unwrap();
            let qx = 1.0 + 2.0 * p[0] - 0.7 * p[1];
            let qy = -2.0 - 0.7 * p[0] + 3.0 * p[1];
            assert!((g[0][0] - qx).abs() < 1e-12 && (g[0][1] - qy).abs() < 1e-12);
            assert!((g[1][0] + qx).abs() < 1e-12 && (g[1][1] + qy - 2.0 * p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_not_representable() {
        let (mesh, layout) = setup(1);
        let c = interpolate_scalar(&layout, |p| p[0].powi(3));
        let v = evaluate_scalar(&c, &mesh, &layout, [0.3, 0.1]).unwrap();
        assert!((v - 0.027).abs() > 1e-3, "{v}");
    }

    #[test]
    fn length_and_domain_errors() {
        let (mesh, layout) = setup(2);
        assert!(matches!(evaluate_scalar(&[1.0; 3], &mesh, &layout, [0.5, 0.5]), Err(Error::Dimension(_))));
        let c = interpolate_scalar(&layout, |_| 0.0);
        assert!(matches!(evaluate_scalar(&c, &mesh, &layout, [2.0, 0.5]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn pressure_is_piecewise_constant() {
        let (mesh, _) = setup(2);
        let p: Vec<f64> = (0..mesh.n_triangles()).map(|t| t as f64).collect();
        for t in 0..mesh.n_triangles() {
            assert_eq!(evaluate_pressure(&p, &mesh, mesh.centroid(t)).unwrap(), t as f64);
        }
    }
}
