//! Reference-element machinery for the P2–P0 pair.

mod basis;
mod dofs;
mod field;
mod quadrature;

pub use basis::{p2_barycentric_gradients, p2_basis, p2_values, ElementGeometry, P2_NODES};
pub use dofs::DofLayout;
pub use field::{
    evaluate_pressure, evaluate_scalar, evaluate_vector, evaluate_vector_gradient, interpolate_scalar,
    interpolate_vector, vector_at, vector_gradient_at,
};
pub use quadrature::{gauss_rule, QuadratureRule};

/// Quadrature degree for bilinear forms (integrands of degree ≤ 4).
pub const BILINEAR_DEGREE: usize = 4;
/// Quadrature degree for the trilinear convection form (degree 2 + 1 + 2).
pub const TRILINEAR_DEGREE: usize = 5;
/// Quadrature degree for loads and error norms against closed forms.
pub const ERROR_DEGREE: usize = 10;
