use rayon::prelude::*;

use super::{ensure_finite, pairwise_sq_distances, Matrix};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Symmetrized k-nearest-neighbour graph under the Euclidean metric.
///
/// `p` and `q` are joined when either is among the other's `k` nearest.
/// Equal distances resolve to the lower instance index.
pub fn knn_adjacency(x: &Matrix, k: usize) -> Result<SparseGraph> {
    let n = x.nrows();
    if k == 0 || k + 1 > n {
        return Err(Error::validation(format!("knn needs 1 <= k <= n-1 = {}, got {k}", n.saturating_sub(1))));
    }
    ensure_finite(x, "knn input")?;
    let d = pairwise_sq_distances(x);
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut others: Vec<usize> = (0..n).filter(|&q| q != p).collect();
            others.sort_by(|&a, &b| d[(p, a)].total_cmp(&d[(p, b)]).then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect();
    let mut g = SparseGraph::new(n);
    for (p, nbrs) in lists.iter().enumerate() {
        for &q in nbrs {
            g.add_edge(p, q);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::from_rows;
    use proptest::prelude::*;

    #[test]
    fn collinear_points_one_neighbour() {
        // brute force: nearest of 0 is 1, of 1 is 0 (dist 1 < 9), of 10 is 1
        let x = from_rows(&[vec![0.0], vec![1.0], vec![10.0]]).unwrap();
        let g = knn_adjacency(&x, 1).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn full_k_is_complete() {
        let x = Matrix::from_fn(5, 2, |i, j| (i * 3 + j) as f64);
        let g = knn_adjacency(&x, 4).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn duplicate_ties_break_by_index() {
        // 1, 2 and 3 are all at distance 0 from each other; node 3 picks 1
        let x = from_rows(&[vec![9.0], vec![0.0], vec![0.0], vec![0.0]]).unwrap();
        let g = knn_adjacency(&x, 1).unwrap();
        assert!(g.has_edge(3, 1));
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(3, 2));
    }

    #[test]
    fn hub_degree_exceeds_twice_k() {
        // every spoke's nearest point is the centre, so the centre collects n-1 edges
        let mut rows = vec![vec![0.0, 0.0]];
        for i in 0..5 {
            let t = i as f64 * 2.0 * std::f64::consts::PI / 5.0;
            rows.push(vec![t.cos(), t.sin()]);
        }
        let x = from_rows(&rows).unwrap();
        let g = knn_adjacency(&x, 1).unwrap();
        assert_eq!(g.degree(0), 5);
    }

    #[test]
    fn k_range_checked() {
        let x = Matrix::zeros(3, 1);
        assert!(knn_adjacency(&x, 0).is_err());
        assert!(knn_adjacency(&x, 3).is_err());
    }

    proptest! {
        #[test]
        fn degree_bounds(n in 3usize..25, k in 1usize..6, seed in 0u64..1000) {
            prop_assume!(k < n);
            let x = Matrix::from_fn(n, 2, |i, j| (((i * 31 + j * 17) as u64 ^ seed) % 97) as f64);
            let g = knn_adjacency(&x, k).unwrap();
            for p in 0..n {
                prop_assert!(!g.has_edge(p, p));
                prop_assert!(g.degree(p) >= k && g.degree(p) < n);
                for q in g.neighbors(p) {
                    prop_assert!(g.has_edge(q, p));
                }
            }
        }
    }
}
