use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Diagonal pivots are kept while `|a_kk| ≥ PIVOT_THRESHOLD · max_i |a_ik|`.
const PIVOT_THRESHOLD: f64 = 0.1;

/// Left-looking sparse LU with threshold partial pivoting (Gilbert–Peierls).
///
/// Factors `P A Q = L U` where `Q` is the supplied column order and `P` is
/// chosen column by column, preferring the diagonal so that a symmetric
/// fill-reducing order keeps its fill.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    col_order: Vec<usize>,
    /// original row -> pivot step
    row_perm: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

impl SparseLu {
    /// `order[k]` is the column eliminated at step `k`.
    pub fn factor(a: &CsrMatrix, order: &[usize]) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(a.ncols(), n, "sparse LU needs a square matrix");
        assert_eq!(order.len(), n);
        // CSR of Aᵀ is CSC of A
        let csc = a.transpose();
        let (a_ptr, a_idx, a_val) = (csc.row_ptr(), csc.col_idx(), csc.values());

        let guess = 4 * a.nnz() + n;
        let mut f = Self {
            n,
            col_order: order.to_vec(),
            row_perm: vec![usize::MAX; n],
            l_ptr: Vec::with_capacity(n + 1),
            l_idx: Vec::with_capacity(guess),
            l_val: Vec::with_capacity(guess),
            u_ptr: Vec::with_capacity(n + 1),
            u_idx: Vec::with_capacity(guess),
            u_val: Vec::with_capacity(guess),
        };

        let mut x = vec![0.0; n];
        let mut reach = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut cursor = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];

        for k in 0..n {
            f.l_ptr.push(f.l_idx.len());
            f.u_ptr.push(f.u_idx.len());
            let col = order[k];
            let (rows, vals) = (&a_idx[a_ptr[col]..a_ptr[col + 1]], &a_val[a_ptr[col]..a_ptr[col + 1]]);

            // pattern of L \ A(:, col), in topological order reach[top..n]
            let mut top = n;
            for &r in rows {
                if mark[r] != k {
                    top = f.depth_first(r, k, top, &mut reach, &mut stack, &mut cursor, &mut mark);
                }
            }
            for &i in &reach[top..] {
                x[i] = 0.0;
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            for &j in &reach[top..] {
                let step = f.row_perm[j];
                if step == usize::MAX {
                    continue;
                }
                let xj = x[j];
                if xj == 0.0 {
                    continue;
                }
                // skip the unit diagonal stored first
                for p in f.l_ptr[step] + 1..f.l_ptr[step + 1] {
                    x[f.l_idx[p]] -= f.l_val[p] * xj;
                }
            }

            let mut pivot_row = usize::MAX;
            let mut largest = -1.0;
            for &i in &reach[top..] {
                let step = f.row_perm[i];
                if step == usize::MAX {
                    if x[i].abs() > largest {
                        largest = x[i].abs();
                        pivot_row = i;
                    }
                } else {
                    f.u_idx.push(step);
                    f.u_val.push(x[i]);
                }
            }
            if pivot_row == usize::MAX || !(largest > 0.0) {
                return Err(Error::Singular { block: "sparse", index: col });
            }
            if f.row_perm[col] == usize::MAX && mark[col] == k && x[col].abs() >= PIVOT_THRESHOLD * largest {
                pivot_row = col;
            }
            let pivot = x[pivot_row];
            f.u_idx.push(k);
            f.u_val.push(pivot);
            f.row_perm[pivot_row] = k;
            f.l_idx.push(pivot_row);
            f.l_val.push(1.0);
            for &i in &reach[top..] {
                if f.row_perm[i] == usize::MAX {
                    f.l_idx.push(i);
                    f.l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        f.l_ptr.push(f.l_idx.len());
        f.u_ptr.push(f.u_idx.len());
        for r in f.l_idx.iter_mut() {
            *r = f.row_perm[*r];
        }
        Ok(f)
    }

    /// Non-recursive depth-first search through the graph of the columns of
    /// `L` computed so far; finished nodes are pushed onto `reach[..top]` from
    /// the back.
    #[allow(clippy::too_many_arguments)]
    fn depth_first(
        &self,
        start: usize,
        k: usize,
        mut top: usize,
        reach: &mut [usize],
        stack: &mut [usize],
        cursor: &mut [usize],
        mark: &mut [usize],
    ) -> usize {
        let mut head = 0;
        stack[0] = start;
        loop {
            let j = stack[head];
            let step = self.row_perm[j];
            if mark[j] != k {
                mark[j] = k;
                cursor[j] = if step == usize::MAX { 0 } else { self.l_ptr[step] + 1 };
            }
            let end = if step == usize::MAX { 0 } else { self.l_ptr[step + 1] };
            let mut descended = false;
            while cursor[j] < end {
                let i = self.l_idx[cursor[j]];
                cursor[j] += 1;
                if mark[i] != k {
                    head += 1;
                    stack[head] = i;
                    descended = true;
                    break;
                }
            }
            if !descended {
                top -= 1;
                reach[top] = j;
                if head == 0 {
                    break;
                }
                head -= 1;
            }
        }
        top
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries in `L` and `U` (including both diagonals).
    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = vec![0.0; n];
        for (i, &v) in b.iter().enumerate() {
            x[self.row_perm[i]] = v;
        }
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                    x[self.l_idx[p]] -= self.l_val[p] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            let diag = self.u_ptr[j + 1] - 1;
            let xj = x[j] / self.u_val[diag];
            x[j] = xj;
            if xj != 0.0 {
                for p in self.u_ptr[j]..diag {
                    x[self.u_idx[p]] -= self.u_val[p] * xj;
                }
            }
        }
        for (k, &col) in self.col_order.iter().enumerate() {
            b[col] = x[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{nested_dissection, DenseLu};
    use crate::sparse::TripletList;
    use rand::{Rng, SeedableRng};

    fn random_sparse(n: usize, density: f64, seed: u64, diag: f64) -> CsrMatrix {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = TripletList::new();
        for i in 0..n {
            t.push(i, i, diag * rng.gen::<f64>());
            for j in 0..n {
                if i != j && rng.gen::<f64>() < density {
                    t.push(i, j, rng.gen::<f64>() - 0.5);
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn matches_dense_solve() {
        for (seed, diag) in [(1, 0.0), (2, 1.0), (3, 5.0)] {
            let a = random_sparse(80, 0.08, seed, diag);
            let b: Vec<f64> = (0..80).map(|i| (i as f64).sin()).collect();
            let dense = DenseLu::factor(&a.to_dense()).unwrap().solve(&b);
            for order in [(0..80).collect::<Vec<_>>(), nested_dissection(&a)] {
                let x = SparseLu::factor(&a, &order).unwrap().solve(&b);
                for (u, v) in x.iter().zip(&dense) {
                    assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()), "{u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn zero_diagonal_pivots_off_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 2.0], vec![0.0, 2.0, 1.0]]);
        let lu = SparseLu::factor(&a, &[0, 1, 2]).unwrap();
        let x = lu.solve(&[1.0, 3.0, 3.0]);
        let r = a.mul_vec(&x);
        for (u, v) in r.iter().zip([1.0, 3.0, 3.0]) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_patterns_rejected() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(SparseLu::factor(&a, &[0, 1]), Err(Error::Singular { .. })));
        let mut t = TripletList::new();
        t.push(0, 0, 1.0);
        t.push(1, 0, 1.0);
        let empty_column = CsrMatrix::from_triplets(2, 2, &t);
        assert_eq!(
            SparseLu::factor(&empty_column, &[0, 1]).unwrap_err(),
            Error::Singular { block: "sparse", index: 1 }
        );
    }
}
