//! Monolithic direct solve of
//!
//! ```text
//!   [ F  Bᵀ ] [U]   [f]
//!   [ B  0  ] [P] = [g]
//! ```
//!
//! with one pressure unknown pinned to remove the constant-pressure kernel and
//! the mean of `P` fixed afterwards. A factorization may be reused for nearby
//! matrices: solves run defect correction against the current `F`, `B`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{factorize, nested_dissection, norm2, DenseLu, Factorization, SparseLu, DENSE_CUTOFF};
use crate::sparse::{CsrMatrix, TripletList};
use crate::{Error, Result};

/// Residual contract of every saddle solve, relative to `1 + ‖rhs‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Defect correction stops once the residual is this small.
const TARGET_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub enum PressureNullspace {
    /// `B` has full row rank; nothing is pinned.
    None,
    /// Constants are in the kernel of `Bᵀ`. The first pressure unknown is
    /// pinned and the result shifted to zero weighted mean.
    Constant { weights: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub f: CsrMatrix,
    pub b: CsrMatrix,
    pub nullspace: PressureNullspace,
}

impl SaddleSystem {
    pub fn new(f: CsrMatrix, b: CsrMatrix, nullspace: PressureNullspace) -> Result<Self> {
        if f.nrows() != f.ncols() {
            return Err(Error::Dimension(format!("velocity block is {}×{}", f.nrows(), f.ncols())));
        }
        if b.ncols() != f.nrows() {
            return Err(Error::Dimension(format!(
                "divergence block has {} columns, velocity block has {} rows",
                b.ncols(),
                f.nrows()
            )));
        }
        if let PressureNullspace::Constant { weights } = &nullspace {
            if weights.len() != b.nrows() {
                return Err(Error::Dimension("pressure weights do not match divergence rows".into()));
            }
        }
        Ok(Self { f, b, nullspace })
    }

    pub fn n_velocity(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_pressure(&self) -> usize {
        self.b.nrows()
    }

    fn pinned(&self) -> Option<usize> {
        match self.nullspace {
            PressureNullspace::Constant { .. } if self.n_pressure() > 0 => Some(0),
            _ => None,
        }
    }

    /// The square system that is factorized: pinned pressure row and column
    /// removed.
    pub fn monolithic(&self) -> CsrMatrix {
        let nu = self.n_velocity();
        let pin = self.pinned();
        let reduced_p = |p: usize| match pin {
            Some(q) if p == q => None,
            Some(q) if p > q => Some(p - 1),
            _ => Some(p),
        };
        let np = self.n_pressure() - usize::from(pin.is_some());
        let mut t = TripletList::with_capacity(self.f.nnz() + 2 * self.b.nnz());
        for i in 0..nu {
            let (cols, vals) = self.f.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push(i, j, v);
            }
        }
        for p in 0..self.n_pressure() {
            if let Some(r) = reduced_p(p) {
                let (cols, vals) = self.b.row(p);
                for (&j, &v) in cols.iter().zip(vals) {
                    t.push(nu + r, j, v);
                    t.push(j, nu + r, v);
                }
            }
        }
        CsrMatrix::from_triplets(nu + np, nu + np, &t)
    }

    /// `(F U + Bᵀ P − f, B U − g)`
    pub fn residual(&self, u: &[f64], p: &[f64], rhs_u: &[f64], rhs_p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut ru = self.f.mul_vec(u);
        self.b.matvec_transpose_add(p, &mut ru);
        ru.iter_mut().zip(rhs_u).for_each(|(r, f)| *r -= f);
        let mut rp = self.b.mul_vec(u);
        rp.iter_mut().zip(rhs_p).for_each(|(r, g)| *r -= g);
        (ru, rp)
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Defect-correction sweeps used (1 when the factorization is exact).
    pub sweeps: usize,
    /// `max(‖F U + Bᵀ P − f‖, ‖B U − g‖) / (1 + ‖(f, g)‖)`
    pub relative_residual: f64,
}

/// A factorized saddle system that keeps its elimination order for
/// refactorization with new values on the same pattern.
#[derive(Debug, Clone)]
pub struct SaddleSolver {
    n_velocity: usize,
    n_pressure: usize,
    pinned: Option<usize>,
    order: Option<Vec<usize>>,
    lu: Factorization,
}

impl SaddleSolver {
    pub fn new(sys: &SaddleSystem) -> Result<Self> {
        let k = sys.monolithic();
        if k.nrows() == 0 {
            return Err(Error::EmptySystem);
        }
        let (order, lu) = if k.nrows() <= DENSE_CUTOFF {
            (None, factorize(&k)?)
        } else {
            let order = nested_dissection(&k);
            let lu = SparseLu::factor(&k, &order)?;
            (Some(order), Factorization::Sparse(lu))
        };
        Ok(Self { n_velocity: sys.n_velocity(), n_pressure: sys.n_pressure(), pinned: sys.pinned(), order, lu })
    }

    /// Factorize new values, reusing the elimination order.
    pub fn refactor(&mut self, sys: &SaddleSystem) -> Result<()> {
        self.check_shape(sys)?;
        let k = sys.monolithic();
        self.lu = match &self.order {
            Some(order) => Factorization::Sparse(SparseLu::factor(&k, order)?),
            None => Factorization::Dense(DenseLu::factor(&k.to_dense())?),
        };
        Ok(())
    }

    fn check_shape(&self, sys: &SaddleSystem) -> Result<()> {
        if sys.n_velocity() != self.n_velocity || sys.n_pressure() != self.n_pressure || sys.pinned() != self.pinned {
            return Err(Error::Dimension("saddle system does not match the factorized one".into()));
        }
        Ok(())
    }

    /// Solve `sys` by defect correction with the stored factorization,
    /// starting from `guess` when given.
    pub fn solve(
        &self,
        sys: &SaddleSystem,
        rhs_u: &[f64],
        rhs_p: &[f64],
        guess: Option<(&[f64], &[f64])>,
    ) -> Result<SaddleSolution> {
        self.check_shape(sys)?;
        let (nu, np) = (self.n_velocity, self.n_pressure);
        if rhs_u.len() != nu || rhs_p.len() != np {
            return Err(Error::Dimension(format!(
                "right-hand side lengths ({}, {}) do not match system ({nu}, {np})",
                rhs_u.len(),
                rhs_p.len()
            )));
        }
        let (mut u, mut p) = match guess {
            Some((u0, p0)) if u0.len() == nu && p0.len() == np => (u0.to_vec(), p0.to_vec()),
            _ => (vec![0.0; nu], vec![0.0; np]),
        };
        if let Some(q) = self.pinned {
            let shift = p[q];
            p.iter_mut().for_each(|v| *v -= shift);
        }

        let (nu_rhs, np_rhs) = (norm2(rhs_u), norm2(rhs_p));
        let rhs_norm = libm::sqrt(nu_rhs * nu_rhs + np_rhs * np_rhs);
        let scale = 1.0 + rhs_norm;
        let mut sweeps = 0;
        let mut previous = f64::INFINITY;
        let mut correction = vec![0.0; self.lu.dim()];
        let residual = loop {
            let (ru, rp) = sys.residual(&u, &p, rhs_u, rhs_p);
            let res = norm2(&ru).max(norm2(&rp)) / scale;
            if !res.is_finite() {
                return Err(Error::Residual { residual: res, tolerance: RESIDUAL_TOL });
            }
            if res <= TARGET_TOL || sweeps >= MAX_SWEEPS || res > 0.5 * previous {
                break res;
            }
            previous = res;
            correction[..nu].iter_mut().zip(&ru).for_each(|(c, r)| *c = -r);
            let mut slot = nu;
            for (q, r) in rp.iter().enumerate() {
                if Some(q) != self.pinned {
                    correction[slot] = -r;
                    slot += 1;
                }
            }
            self.lu.solve_in_place(&mut correction);
            u.iter_mut().zip(&correction[..nu]).for_each(|(x, d)| *x += d);
            let mut slot = nu;
            for (q, x) in p.iter_mut().enumerate() {
                if Some(q) != self.pinned {
                    *x += correction[slot];
                    slot += 1;
                }
            }
            sweeps += 1;
        };

        if residual > RESIDUAL_TOL {
            return Err(Error::Residual { residual, tolerance: RESIDUAL_TOL });
        }
        if let PressureNullspace::Constant { weights } = &sys.nullspace {
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                let mean = weights.iter().zip(&p).map(|(w, v)| w * v).sum::<f64>() / total;
                p.iter_mut().for_each(|v| *v -= mean);
            }
        }
        Ok(SaddleSolution { velocity: u, pressure: p, sweeps, relative_residual: residual })
    }
}

/// One-shot factorize and solve; the returned pressure has zero weighted mean
/// when the system carries a constant-pressure kernel.
pub fn solve_saddle(sys: &SaddleSystem, rhs_u: &[f64], rhs_p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let solver = SaddleSolver::new(sys)?;
    let sol = solver.solve(sys, rhs_u, rhs_p, None)?;
    Ok((sol.velocity, sol.pressure))
}
