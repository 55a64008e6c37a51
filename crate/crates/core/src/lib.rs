//! Mixed finite elements for the Kelvin–Voigt viscoelastic flow equations
//!
//! ```text
//!   u_t − κ Δu_t − ν Δu + (u·∇)u + ∇p = f,   ∇·u = 0   in Ω = (0,1)²,
//!   u = 0 on ∂Ω
//! ```
//!
//! discretized with continuous P2 velocities, piecewise-constant (P0)
//! pressures and backward-Euler time stepping. The crate is `no_std` and only
//! needs an allocator; file formats, configuration and the command line live in
//! the `kvflow` companion crate.
//!
//! Module map:
//!
//! * [`mesh`]: structured triangulations of the unit square, refinement and
//!   point location.
//! * [`fem`]: triangle quadrature, the P2 Lagrange basis, the P2–P0 degree of
//!   freedom layout and field evaluation.
//! * [`sparse`] and [`linalg`]: CSR storage, dense and sparse LU, and the
//!   saddle-point solver.
//! * [`assembly`]: mass, stiffness, divergence, skew-symmetric convection and
//!   load assembly, and Dirichlet elimination.
//! * [`problems`]: the manufactured solutions and initial data of the
//!   numerical experiments.
//! * [`stepper`]: the fully discrete scheme with Picard linearization.
//! * [`analysis`]: error norms, rates, energy traces, the Poincaré constant and
//!   the absorbing-ball diagnostic.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod assembly;
mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod sparse;
pub mod stepper;

pub use error::{Error, Result};
pub use mesh::{Point, TriangleMesh};
pub use sparse::CsrMatrix;
