use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Quadrature on the reference triangle `{(x, y) : x, y ≥ 0, x + y ≤ 1}`.
///
/// Points are barycentric triples `(1 − x − y, x, y)`; the reference area ½ is
/// absorbed into the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Collapsed (Duffy) tensor Gauss–Legendre rule exact for total degree
/// `degree`, `1 ≤ degree ≤ 10`.
///
/// With `x = ξ(1 − η)`, `y = η` the monomial `x^a y^b` becomes a polynomial of
/// degree `a` in ξ and `a + b + 1` in η, so `⌈(degree + 2)/2⌉` points per
/// direction suffice.
pub fn gauss_rule(degree: usize) -> Result<QuadratureRule> {
    if !(1..=10).contains(&degree) {
        return Err(Error::Config(format!("unsupported triangle quadrature degree {degree} (supported: 1..=10)")));
    }
    let m = (degree + 3) / 2;
    let (nodes, w) = gauss_legendre_unit(m);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (&eta, &we) in nodes.iter().zip(&w) {
        for (&xi, &wx) in nodes.iter().zip(&w) {
            let x = xi * (1.0 - eta);
            let y = eta;
            points.push([1.0 - x - y, x, y]);
            weights.push(wx * we * (1.0 - eta));
        }
    }
    Ok(QuadratureRule { points, weights, exact_degree: degree })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, Newton iteration on the
/// three-term recurrence.
fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mf = m as f64;
    for i in 0..m {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5));
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
