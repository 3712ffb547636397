//! Symmetric binary adjacency over instances.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Undirected, unweighted graph without self-loops.
///
/// Symmetry and the zero diagonal hold by construction: `add_edge` always
/// inserts both directions and ignores `p == q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl SparseGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, p: usize, q: usize) {
        if p == q {
            return;
        }
        self.adj[p].insert(q);
        self.adj[q].insert(p);
    }

    pub fn has_edge(&self, p: usize, q: usize) -> bool {
        self.adj[p].contains(&q)
    }

    pub fn neighbors(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[p].iter().copied()
    }

    pub fn degree(&self, p: usize) -> usize {
        self.adj[p].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(p, q)` with `p < q`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(p, nbrs)| nbrs.range(p + 1..).map(move |&q| (p, q)))
    }

    /// Elementwise OR of two graphs over the same node set.
    pub fn union(&self, other: &SparseGraph) -> Result<SparseGraph> {
        if self.len() != other.len() {
            return Err(Error::dimension(format!(
                "cannot union graphs of {} and {} nodes",
                self.len(),
                other.len()
            )));
        }
        let mut out = self.clone();
        for (p, q) in other.edges() {
            out.add_edge(p, q);
        }
        Ok(out)
    }

    /// Places each graph on the diagonal of a larger graph, in order.
    pub fn block_diagonal(blocks: &[SparseGraph]) -> SparseGraph {
        let total = blocks.iter().map(SparseGraph::len).sum();
        let mut out = SparseGraph::new(total);
        let mut offset = 0;
        for block in blocks {
            for (p, q) in block.edges() {
                out.add_edge(offset + p, offset + q);
            }
            offset += block.len();
        }
        out
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.len();
        let mut m = Matrix::zeros(n, n);
        for (p, q) in self.edges() {
            m[(p, q)] = 1.0;
            m[(q, p)] = 1.0;
        }
        m
    }

    /// Builds a graph from a dense 0/1 matrix, rejecting anything that is not
    /// symmetric binary with a zero diagonal.
    pub fn from_dense(m: &Matrix) -> Result<SparseGraph> {
        if m.nrows() != m.ncols() {
            return Err(Error::dimension(format!(
                "adjacency must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut g = SparseGraph::new(n);
        for p in 0..n {
            for q in 0..n {
                let v = m[(p, q)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::validation(format!("entry ({p},{q}) = {v} is not binary")));
                }
                if v != m[(q, p)] {
                    return Err(Error::validation(format!("adjacency asymmetric at ({p},{q})")));
                }
                if p == q && v != 0.0 {
                    return Err(Error::validation(format!("self-loop at node {p}")));
                }
                if p < q && v == 1.0 {
                    g.add_edge(p, q);
                }
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loops_are_ignored() {
        let mut g = SparseGraph::new(3);
        g.add_edge(1, 1);
        g.add_edge(0, 2);
        assert_eq!(g.edge_count(), 1);
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(1, 1));
    }

    #[test]
    fn block_diagonal_offsets() {
        let mut a = SparseGraph::new(2);
        a.add_edge(0, 1);
        let mut b = SparseGraph::new(3);
        b.add_edge(0, 2);
        let g = SparseGraph::block_diagonal(&[a, b]);
        assert_eq!(g.len(), 5);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (2, 4)]);
    }

    #[test]
    fn dense_round_trip_and_rejects() {
        let mut g = SparseGraph::new(4);
        g.add_edge(0, 3);
        g.add_edge(1, 2);
        assert_eq!(SparseGraph::from_dense(&g.to_dense()).unwrap(), g);

        let mut m = g.to_dense();
        m[(0, 1)] = 1.0;
        assert!(matches!(SparseGraph::from_dense(&m), Err(Error::Validation(_))));
        let mut m = g.to_dense();
        m[(2, 2)] = 1.0;
        assert!(SparseGraph::from_dense(&m).is_err());
    }

    #[test]
    fn union_rejects_size_mismatch() {
        assert!(SparseGraph::new(2).union(&SparseGraph::new(3)).is_err());
    }
}
