//! Direct solvers: dense and sparse LU with partial pivoting, a nested
//! dissection ordering, and the pressure-pinned saddle-point solve.

mod dense;
mod lu;
mod ordering;
mod saddle;

pub use dense::DenseLu;
pub use lu::SparseLu;
pub use ordering::nested_dissection;
pub use saddle::{solve_saddle, PressureNullspace, SaddleSolution, SaddleSolver, SaddleSystem};

use alloc::format;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Systems up to this size are factorized densely.
pub const DENSE_CUTOFF: usize = 64;

/// A reusable factorization of a square matrix.
#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu),
    Sparse(SparseLu),
}

impl Factorization {
    pub fn dim(&self) -> usize {
        match self {
            Factorization::Dense(lu) => lu.dim(),
            Factorization::Sparse(lu) => lu.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        match self {
            Factorization::Dense(lu) => lu.solve_in_place(x),
            Factorization::Sparse(lu) => lu.solve_in_place(x),
        }
    }
}

/// Factorize a square matrix: dense LU below [`DENSE_CUTOFF`], otherwise
/// sparse LU under a nested dissection ordering.
pub fn factorize(a: &CsrMatrix) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("cannot factorize a {}×{} matrix", a.nrows(), a.ncols())));
    }
    if a.nrows() <= DENSE_CUTOFF {
        DenseLu::factor(&a.to_dense()).map(Factorization::Dense)
    } else {
        let order = nested_dissection(a);
        SparseLu::factor(a, &order).map(Factorization::Sparse)
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}
