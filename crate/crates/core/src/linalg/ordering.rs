use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;

/// Subsets at most this large are ordered as they come.
const LEAF_SIZE: usize = 24;

/// Fill-reducing elimination order for the symmetrized pattern of `a`:
/// recursive bisection by breadth-first level structures, separators last.
/// Returns `order[k]` = original index eliminated at step `k`.
pub fn nested_dissection(a: &CsrMatrix) -> Vec<usize> {
    assert_eq!(a.nrows(), a.ncols());
    let graph = Graph::symmetrized(a);
    let n = a.nrows();
    let mut nd = Dissector {
        graph: &graph,
        member: vec![0; n],
        member_stamp: 0,
        visited: vec![0; n],
        visit_stamp: 0,
        level: vec![0; n],
        order: Vec::with_capacity(n),
    };
    nd.dissect((0..n).collect());
    debug_assert_eq!(nd.order.len(), n);
    nd.order
}

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    fn symmetrized(a: &CsrMatrix) -> Self {
        let sym = a.add_scaled(1.0, &a.transpose(), 1.0);
        let mut ptr = Vec::with_capacity(a.nrows() + 1);
        let mut adj = Vec::with_capacity(sym.nnz());
        ptr.push(0);
        for i in 0..sym.nrows() {
            let (cols, _) = sym.row(i);
            adj.extend(cols.iter().copied().filter(|&j| j != i));
            ptr.push(adj.len());
        }
        Self { ptr, adj }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }

    fn degree(&self, v: usize) -> usize {
        self.ptr[v + 1] - self.ptr[v]
    }
}

struct Dissector<'g> {
    graph: &'g Graph,
    member: Vec<usize>,
    member_stamp: usize,
    visited: Vec<usize>,
    visit_stamp: usize,
    level: Vec<usize>,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= LEAF_SIZE {
            self.order.extend(nodes);
            return;
        }
        self.member_stamp += 1;
        let stamp = self.member_stamp;
        for &v in &nodes {
            self.member[v] = stamp;
        }

        let components = self.components(&nodes, stamp);
        if components.len() > 1 {
            for c in components {
                self.dissect(c);
            }
            return;
        }

        let levels = self.rooted_levels(&nodes, stamp);
        if levels.len() < 3 {
            self.order.extend(nodes);
            return;
        }
        let split = choose_level(&levels, nodes.len());

        let mut below: Vec<usize> = levels[..split].concat();
        let mut separator = Vec::with_capacity(levels[split].len());
        for &v in &levels[split] {
            let touches_above =
                self.graph.neighbors(v).iter().any(|&w| self.member[w] == stamp && self.level[w] == split + 1);
            if touches_above {
                separator.push(v);
            } else {
                below.push(v);
            }
        }
        let above: Vec<usize> = levels[split + 1..].concat();
        self.dissect(below);
        self.dissect(above);
        self.order.extend(separator);
    }

    fn components(&mut self, nodes: &[usize], stamp: usize) -> Vec<Vec<usize>> {
        self.visit_stamp += 1;
        let vs = self.visit_stamp;
        let mut out = Vec::new();
        for &start in nodes {
            if self.visited[start] == vs {
                continue;
            }
            let mut comp = vec![start];
            self.visited[start] = vs;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in self.graph.neighbors(v) {
                    if self.member[w] == stamp && self.visited[w] != vs {
                        self.visited[w] = vs;
                        comp.push(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn bfs(&mut self, root: usize, stamp: usize) -> Vec<Vec<usize>> {
        self.visit_stamp += 1;
        let vs = self.visit_stamp;
        self.visited[root] = vs;
        self.level[root] = 0;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            let depth = levels.len();
            for &v in levels.last().unwrap() {
                for &w in self.graph.neighbors(v) {
                    if self.member[w] == stamp && self.visited[w] != vs {
                        self.visited[w] = vs;
                        self.level[w] = depth;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    /// Level structure rooted at a pseudo-peripheral node.
    fn rooted_levels(&mut self, nodes: &[usize], stamp: usize) -> Vec<Vec<usize>> {
        let g = self.graph;
        let mut root = *nodes.iter().min_by_key(|&&v| (g.degree(v), v)).unwrap();
        let mut levels = self.bfs(root, stamp);
        for _ in 0..8 {
            let candidate = *levels.last().unwrap().iter().min_by_key(|&&v| (g.degree(v), v)).unwrap();
            let trial = self.bfs(candidate, stamp);
            if trial.len() > levels.len() {
                root = candidate;
                levels = trial;
            } else {
                break;
            }
        }
        // restore level numbers for the chosen root
        self.bfs(root, stamp)
    }
}

/// Smallest level that leaves at least a fifth of the nodes on each side,
/// otherwise the median level.
fn choose_level(levels: &[Vec<usize>], total: usize) -> usize {
    let mut best: Option<(usize, usize, usize)> = None;
    let mut below = levels[0].len();
    let mut median = None;
    for (l, lev) in levels.iter().enumerate().take(levels.len() - 1).skip(1) {
        let above = total - below - lev.len();
        if median.is_none() && below + lev.len() >= total / 2 {
            median = Some(l);
        }
        if below.min(above) * 5 >= total {
            let key = (lev.len(), below.abs_diff(above), l);
            if best.map_or(true, |b| key < b) {
                best = Some(key);
            }
        }
        below += lev.len();
    }
    best.map(|b| b.2).or(median).unwrap_or(levels.len() / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletList;

    fn grid_laplacian(m: usize) -> CsrMatrix {
        let mut t = TripletList::new();
        let id = |i: usize, j: usize| j * m + i;
        for j in 0..m {
            for i in 0..m {
                t.push(id(i, j), id(i, j), 4.0);
                if i + 1 < m {
                    t.push(id(i, j), id(i + 1, j), -1.0);
                    t.push(id(i + 1, j), id(i, j), -1.0);
                }
                if j + 1 < m {
                    t.push(id(i, j), id(i, j + 1), -1.0);
                    t.push(id(i, j + 1), id(i, j), -1.0);
                }
            }
        }
        CsrMatrix::from_triplets(m * m, m * m, &t)
    }

    #[test]
    fn ordering_is_a_permutation() {
        for m in [1, 3, 10, 31] {
            let order = nested_dissection(&grid_laplacian(m));
            let mut seen = vec![false; m * m];
            for &v in &order {
                assert!(!seen[v]);
                seen[v] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn disconnected_graph_handled() {
        let order = nested_dissection(&CsrMatrix::identity(100));
        assert_eq!(order.len(), 100);
    }
}
