//! Manufactured solutions, initial data and forcing terms.
//!
//! Examples 1 and 2 share the stream-function profile `a(s) = s²(s−1)²`:
//! `U = 5 (a(x) a'(y), −a'(x) a(y))`, which vanishes on the boundary and is
//! pointwise divergence-free.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, sin};

use crate::assembly::assemble_load;
use crate::fem::DofLayout;
use crate::mesh::{Point, TriangleMesh};
use crate::{Error, Result};

/// Source of the right-hand side `(f(t), φ_i)` over all velocity DOFs.
pub trait Forcing {
    fn load(&self, t: f64, mesh: &TriangleMesh, layout: &DofLayout) -> Vec<f64>;

    /// `true` when the load is identically zero for every `t`.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroForcing;

impl Forcing for ZeroForcing {
    fn load(&self, _t: f64, _mesh: &TriangleMesh, layout: &DofLayout) -> Vec<f64> {
        alloc::vec![0.0; layout.n_velocity()]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// A time-independent load vector given directly in velocity DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLoad(pub Vec<f64>);

impl Forcing for FixedLoad {
    fn load(&self, _t: f64, _mesh: &TriangleMesh, layout: &DofLayout) -> Vec<f64> {
        assert_eq!(self.0.len(), layout.n_velocity(), "fixed load does not match the layout");
        self.0.clone()
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Time-periodic manufactured solution with forcing.
    One,
    /// Unforced decay from the example-1 profile.
    Two,
    /// Unforced decay from a trigonometric initial field.
    Three,
    /// Stationary solution of the full nonlinear problem (example-1 profile
    /// without the `cos t` factor).
    Steady,
    /// `u = 0`, `p = 0`, `f = 0`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedProblem {
    pub example: Example,
    pub nu: f64,
    pub kappa: f64,
    /// Multiplies the forcing.
    pub forcing_scale: f64,
    /// Multiplies the initial velocity.
    pub initial_scale: f64,
}

fn a(s: f64) -> f64 {
    s * s * (s - 1.0) * (s - 1.0)
}

fn a1(s: f64) -> f64 {
    ((4.0 * s - 6.0) * s + 2.0) * s
}

fn a2(s: f64) -> f64 {
    (12.0 * s - 12.0) * s + 2.0
}

fn a3(s: f64) -> f64 {
    24.0 * s - 12.0
}

fn profile(x: f64, y: f64) -> [f64; 2] {
    [5.0 * a(x) * a1(y), -5.0 * a1(x) * a(y)]
}

/// `[[∂x U1, ∂y U1], [∂x U2, ∂y U2]]`
fn profile_gradient(x: f64, y: f64) -> [[f64; 2]; 2] {
    [[5.0 * a1(x) * a1(y), 5.0 * a(x) * a2(y)], [-5.0 * a2(x) * a(y), -5.0 * a1(x) * a1(y)]]
}

fn profile_laplacian(x: f64, y: f64) -> [f64; 2] {
    [5.0 * (a2(x) * a1(y) + a(x) * a3(y)), -5.0 * (a3(x) * a(y) + a1(x) * a2(y))]
}

/// `(U·∇)U`
fn profile_convection(x: f64, y: f64) -> [f64; 2] {
    [25.0 * a(x) * a1(x) * (a1(y) * a1(y) - a(y) * a2(y)), 25.0 * a(y) * a1(y) * (a1(x) * a1(x) - a(x) * a2(x))]
}

fn trig_initial(x: f64, y: f64) -> [f64; 2] {
    let (sx, sy) = (sin(3.0 * PI * x), sin(3.0 * PI * y));
    [sx * sx * sin(6.0 * PI * y), -sy * sy * sin(6.0 * PI * x)]
}

impl ManufacturedProblem {
    pub fn new(example: Example, nu: f64, kappa: f64) -> Self {
        Self { example, nu, kappa, forcing_scale: 1.0, initial_scale: 1.0 }
    }

    /// Example 1 with `ν = 1` and the given `κ`.
    pub fn example1(kappa: f64) -> Self {
        Self::new(Example::One, 1.0, kappa)
    }

    pub fn example2() -> Self {
        Self::new(Example::Two, 1.0, 1.0)
    }

    pub fn example3() -> Self {
        Self::new(Example::Three, 1.0, 1.0)
    }

    pub fn steady(nu: f64, kappa: f64) -> Self {
        Self::new(Example::Steady, nu, kappa)
    }

    pub fn zero() -> Self {
        Self::new(Example::Zero, 1.0, 1.0)
    }

    pub fn with_forcing_scale(mut self, s: f64) -> Self {
        self.forcing_scale = s;
        self
    }

    pub fn with_initial_scale(mut self, s: f64) -> Self {
        self.initial_scale = s;
        self
    }

    /// Whether closed-form `u`, `p` solve the problem as configured.
    pub fn has_exact(&self) -> bool {
        match self.example {
            Example::One | Example::Steady => self.forcing_scale == 1.0 && self.initial_scale == 1.0,
            Example::Zero => true,
            Example::Two | Example::Three => false,
        }
    }

    fn time_factor(&self, t: f64) -> f64 {
        match self.example {
            Example::One => cos(t),
            _ => 1.0,
        }
    }

    /// The closed-form velocity, or `None` when only a reference solution
    /// is available.
    pub fn exact_velocity(&self, p: Point, t: f64) -> Option<[f64; 2]> {
        if !self.has_exact() {
            return None;
        }
        Some(match self.example {
            Example::Zero => [0.0; 2],
            _ => {
                let c = self.time_factor(t);
                let u = profile(p[0], p[1]);
                [c * u[0], c * u[1]]
            }
        })
    }

    /// Jacobian `[[∂x u1, ∂y u1], [∂x u2, ∂y u2]]` of the exact velocity.
    pub fn exact_velocity_gradient(&self, p: Point, t: f64) -> Option<[[f64; 2]; 2]> {
        if !self.has_exact() {
            return None;
        }
        Some(match self.example {
            Example::Zero => [[0.0; 2]; 2],
            _ => {
                let c = self.time_factor(t);
                let g = profile_gradient(p[0], p[1]);
                [[c * g[0][0], c * g[0][1]], [c * g[1][0], c * g[1][1]]]
            }
        })
    }

    pub fn exact_pressure(&self, p: Point, t: f64) -> Option<f64> {
        if !self.has_exact() {
            return None;
        }
        Some(match self.example {
            Example::Zero => 0.0,
            _ => 40.0 * self.time_factor(t) * p[0] * p[1],
        })
    }

    /// Pressure listed alongside the example-2 initial data; not used by the
    /// scheme.
    pub fn listed_initial_pressure(&self, p: Point) -> Option<f64> {
        match self.example {
            Example::Two => Some(40.0 * p[0] * p[1]),
            _ => None,
        }
    }

    pub fn initial_velocity(&self, p: Point) -> [f64; 2] {
        let u = match self.example {
            Example::One | Example::Two | Example::Steady => profile(p[0], p[1]),
            Example::Three => trig_initial(p[0], p[1]),
            Example::Zero => [0.0; 2],
        };
        [self.initial_scale * u[0], self.initial_scale * u[1]]
    }

    /// `f = u_t + (u·∇)u − κΔu_t − νΔu + ∇p` in closed form.
    pub fn forcing(&self, p: Point, t: f64) -> [f64; 2] {
        let (x, y) = (p[0], p[1]);
        let f = match self.example {
            Example::One => {
                let (c, s) = (cos(t), sin(t));
                let u = profile(x, y);
                let lap = profile_laplacian(x, y);
                let conv = profile_convection(x, y);
                let grad_p = [40.0 * c * y, 40.0 * c * x];
                core::array::from_fn(|i| {
                    -s * u[i] + c * c * conv[i] + self.kappa * s * lap[i] - self.nu * c * lap[i] + grad_p[i]
                })
            }
            Example::Steady => {
                let lap = profile_laplacian(x, y);
                let conv = profile_convection(x, y);
                [conv[0] - self.nu * lap[0] + 40.0 * y, conv[1] - self.nu * lap[1] + 40.0 * x]
            }
            Example::Two | Example::Three | Example::Zero => [0.0; 2],
        };
        [self.forcing_scale * f[0], self.forcing_scale * f[1]]
    }

    pub fn has_forcing(&self) -> bool {
        self.forcing_scale != 0.0 && matches!(self.example, Example::One | Example::Steady)
    }
}

impl Forcing for ManufacturedProblem {
    fn load(&self, t: f64, mesh: &TriangleMesh, layout: &DofLayout) -> Vec<f64> {
        if !self.has_forcing() {
            return alloc::vec![0.0; layout.n_velocity()];
        }
        assemble_load(|x, y, t| self.forcing([x, y], t), t, mesh, layout)
    }

    fn is_zero(&self) -> bool {
        !self.has_forcing()
    }
}

/// Sixth-order central difference weights for the first and second
/// derivative on offsets −3..=3.
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];

fn stencil<const N: usize>(w: &[f64; 7], step: f64, g: impl Fn(f64) -> [f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for (j, &c) in w.iter().enumerate() {
        if c != 0.0 {
            let v = g((j as f64 - 3.0) * step);
            for i in 0..N {
                out[i] += c * v[i];
            }
        }
    }
    out
}

/// Points of the Halton sequence in bases 2, 3, 5.
fn halton(i: usize, base: usize) -> f64 {
    let (mut f, mut r, mut i) = (1.0, 0.0, i);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Largest deviation of the closed-form forcing from the PDE residual of the
/// closed-form `u`, `p`, where every derivative is taken by sixth-order
/// central differences. Samples `(x, y, t)` over `[0,1]² × [0, 2π]`.
pub fn forcing_consistency_check(problem: &ManufacturedProblem, samples: usize) -> Result<f64> {
    if !problem.has_exact() {
        return Err(Error::MissingReference);
    }
    let hs = 1e-2;
    let ht = 1e-2;
    let u = |x: f64, y: f64, t: f64| problem.exact_velocity([x, y], t).unwrap_or([0.0; 2]);
    let p = |x: f64, y: f64, t: f64| [problem.exact_pressure([x, y], t).unwrap_or(0.0)];
    let laplacian = |x: f64, y: f64, t: f64| {
        let dxx = stencil(&D2, hs, |d| u(x + d, y, t));
        let dyy = stencil(&D2, hs, |d| u(x, y + d, t));
        [(dxx[0] + dyy[0]) / (hs * hs), (dxx[1] + dyy[1]) / (hs * hs)]
    };

    let mut worst: f64 = 0.0;
    for i in 1..=samples {
        let (x, y, t) = (halton(i, 2), halton(i, 3), 2.0 * PI * halton(i, 5));
        let v = u(x, y, t);
        let ut = stencil(&D1, ht, |d| u(x, y, t + d)).map(|c| c / ht);
        let ux = stencil(&D1, hs, |d| u(x + d, y, t)).map(|c| c / hs);
        let uy = stencil(&D1, hs, |d| u(x, y + d, t)).map(|c| c / hs);
        let lap = laplacian(x, y, t);
        let lap_t = stencil(&D1, ht, |d| laplacian(x, y, t + d)).map(|c| c / ht);
        let px = stencil(&D1, hs, |d| p(x + d, y, t))[0] / hs;
        let py = stencil(&D1, hs, |d| p(x, y + d, t))[0] / hs;
        let grad_p = [px, py];
        let f = problem.forcing([x, y], t);
        for c in 0..2 {
            let residual =
                ut[c] + v[0] * ux[c] + v[1] * uy[c] - problem.kappa * lap_t[c] - problem.nu * lap[c] + grad_p[c];
            worst = worst.max((f[c] - residual).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn divergence_fd(u: impl Fn(f64, f64) -> [f64; 2], x: f64, y: f64) -> f64 {
        let h = 1e-3;
        let dx = stencil(&D1, h, |d| u(x + d, y))[0] / h;
        let dy = stencil(&D1, h, |d| u(x, y + d))[1] / h;
        dx + dy
    }

    #[test]
    fn example1_closed_form_values() {
        let p = ManufacturedProblem::example1(1.0);
        for t in [0.0, 0.7, 3.0] {
            assert_eq!(p.exact_velocity([0.5, 0.5], t).unwrap()[0], 0.0);
        }
        let u = p.exact_velocity([0.5, 0.25], 0.0).unwrap();
        assert!((u[0] - 0.05859375).abs() < 1e-16);
        // expanded form of the second component
        let (x, y) = (0.3, 0.8);
        let expanded = -10.0 * y * y * (y - 1.0) * (y - 1.0) * x * (x - 1.0) * (2.0 * x - 1.0);
        assert!((p.exact_velocity([x, y], 0.0).unwrap()[1] - expanded).abs() < 1e-15);
        assert!((p.exact_pressure([0.5, 0.5], 0.0).unwrap() - 10.0).abs() < 1e-15);
    }

    #[test]
    fn example1_forcing_matches_pde_residual() {
        for kappa in [0.0, 1e-3, 1.0] {
            let dev = forcing_consistency_check(&ManufacturedProblem::example1(kappa), 1000).unwrap();
            assert!(dev < 1e-8, "kappa {kappa}: {dev}");
        }
        let dev = forcing_consistency_check(&ManufacturedProblem::steady(0.5, 1.0), 200).unwrap();
        assert!(dev < 1e-8);
        assert_eq!(forcing_consistency_check(&ManufacturedProblem::zero(), 50).unwrap(), 0.0);
        assert_eq!(
            forcing_consistency_check(&ManufacturedProblem::example2(), 5).unwrap_err(),
            Error::MissingReference
        );
    }

    #[test]
    fn forcing_is_affine_in_kappa() {
        let f0 = ManufacturedProblem::example1(0.0);
        let f1 = ManufacturedProblem::example1(0.37);
        for i in 1..200 {
            let (x, t) = ([halton(i, 2), halton(i, 3)], 2.0 * PI * halton(i, 5));
            let lap = profile_laplacian(x[0], x[1]);
            let (a, b) = (f1.forcing(x, t), f0.forcing(x, t));
            for c in 0..2 {
                // −κΔu_t with u_t = −sin t U
                let expected = 0.37 * sin(t) * lap[c];
                assert!((a[c] - b[c] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unforced_examples() {
        for p in [ManufacturedProblem::example2(), ManufacturedProblem::example3()] {
            assert!(!p.has_exact());
            assert!(p.exact_velocity([0.3, 0.3], 0.0).is_none());
            assert_eq!(p.forcing([0.3, 0.6], 1.0), [0.0, 0.0]);
            assert!(Forcing::is_zero(&p));
        }
        assert_eq!(ManufacturedProblem::example2().listed_initial_pressure([0.5, 0.5]), Some(10.0));
        assert_eq!(ManufacturedProblem::example3().listed_initial_pressure([0.5, 0.5]), None);
    }

    #[test]
    fn example3_initial_values() {
        let p = ManufacturedProblem::example3();
        let u = p.initial_velocity([1.0 / 12.0, 1.0 / 12.0]);
        assert!((u[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn initial_fields_vanish_on_boundary() {
        for p in [ManufacturedProblem::example2(), ManufacturedProblem::example3()] {
            for i in 0..100 {
                let s = i as f64 / 99.0;
                for q in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                    let u = p.initial_velocity(q);
                    assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14, "{q:?}: {u:?}");
                }
            }
        }
    }

    #[test]
    fn exact_gradient_matches_differences() {
        let p = ManufacturedProblem::example1(1.0);
        for i in 1..100 {
            let (x, y, t) = (halton(i, 2), halton(i, 3), halton(i, 5));
            let g = p.exact_velocity_gradient([x, y], t).unwrap();
            let h = 1e-2;
            let dx = stencil(&D1, h, |d| p.exact_velocity([x + d, y], t).unwrap());
            let dy = stencil(&D1, h, |d| p.exact_velocity([x, y + d], t).unwrap());
            for c in 0..2 {
                assert!((g[c][0] - dx[c] / h).abs() < 1e-12);
                assert!((g[c][1] - dy[c] / h).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn fields_are_divergence_free(x in 0.0..1.0f64, y in 0.0..1.0f64, t in 0.0..10.0f64) {
            let p1 = ManufacturedProblem::example1(1.0);
            prop_assert!(divergence_fd(|x, y| p1.exact_velocity([x, y], t).unwrap(), x, y).abs() < 1e-10);
            let g = p1.exact_velocity_gradient([x, y], t).unwrap();
            prop_assert!((g[0][0] + g[1][1]).abs() < 1e-12);
            let p3 = ManufacturedProblem::example3();
            prop_assert!(divergence_fd(|x, y| p3.initial_velocity([x, y]), x, y).abs() < 1e-7);
        }

        #[test]
        fn exact_velocity_vanishes_on_boundary(s in 0.0..1.0f64, t in 0.0..10.0f64) {
            let p = ManufacturedProblem::example1(1e-3);
            for q in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                let u = p.exact_velocity(q, t).unwrap();
                prop_assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15);
            }
        }
    }
}
