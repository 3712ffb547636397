use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ensure_finite, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once the relative cost decrease between iterations falls below this.
    pub tolerance: f64,
    /// Independent k-means++ restarts; the lowest-cost run is kept.
    pub restarts: usize,
    /// How many times per restart an empty cluster may be re-seeded.
    pub reseed_limit: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tolerance: 1e-6,
            restarts: 5,
            reseed_limit: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    /// Sum of squared distances to the assigned centroid.
    pub cost: f64,
}

/// Seeded k-means with default parameters, returning only the labels.
pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_fit(x, k, seed, &KMeansParams::default())?.labels)
}

pub fn kmeans_fit(x: &Matrix, k: usize, seed: u64, params: &KMeansParams) -> Result<KMeansFit> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::validation(format!("kmeans needs 1 <= k <= n = {n}, got {k}")));
    }
    ensure_finite(x, "kmeans input")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..params.restarts.max(1) {
        let fit = lloyd(x, plus_plus(x, k, &mut rng), params);
        if best.as_ref().is_none_or(|b| fit.cost < b.cost) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist_to(x: &Matrix, p: usize, centroids: &Matrix, c: usize) -> f64 {
    x.row(p)
        .iter()
        .zip(centroids.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus(x: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = x.nrows();
    let mut centroids = Matrix::zeros(k, x.ncols());
    let first = rng.random_range(0..n);
    centroids.set_row(0, &x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|p| sq_dist_to(x, p, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (p, &w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = p;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.set_row(c, &x.row(pick));
        for (p, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist_to(x, p, &centroids, c));
        }
    }
    centroids
}

fn assign(x: &Matrix, centroids: &Matrix, labels: &mut [usize]) -> f64 {
    let mut cost = 0.0;
    for (p, label) in labels.iter_mut().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for c in 0..centroids.nrows() {
            let d = sq_dist_to(x, p, centroids, c);
            if d < best.0 {
                best = (d, c);
            }
        }
        *label = best.1;
        cost += best.0;
    }
    cost
}

fn lloyd(x: &Matrix, mut centroids: Matrix, params: &KMeansParams) -> KMeansFit {
    let (n, m) = x.shape();
    let k = centroids.nrows();
    let mut labels = vec![0; n];
    let mut cost = assign(x, &centroids, &mut labels);
    let mut reseeds = 0;
    for _ in 0..params.max_iter {
        let mut sums = Matrix::zeros(k, m);
        let mut counts = vec![0usize; k];
        for (p, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += x.row(p);
        }
        let mut reseeded = false;
        for c in 0..k {
            if counts[c] > 0 {
                let mean = sums.row(c) / counts[c] as f64;
                centroids.set_row(c, &mean);
            } else if reseeds < params.reseed_limit {
                // move the empty centroid onto the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist_to(x, a, &centroids, labels[a]);
                        let db = sq_dist_to(x, b, &centroids, labels[b]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("n >= 1");
                centroids.set_row(c, &x.row(far));
                labels[far] = c;
                reseeds += 1;
                reseeded = true;
            }
        }
        let next = assign(x, &centroids, &mut labels);
        let converged = !reseeded && (cost - next) <= params.tolerance * cost.max(f64::MIN_POSITIVE);
        cost = next;
        if converged || cost == 0.0 {
            break;
        }
    }
    KMeansFit {
        labels,
        centroids,
        cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::from_rows;

    /// Minimum 2-partition cost over every non-trivial split.
    fn best_two_partition(x: &Matrix) -> (f64, Vec<usize>) {
        let n = x.nrows();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1..(1u32 << n) - 1 {
            let labels: Vec<usize> = (0..n).map(|p| ((mask >> p) & 1) as usize).collect();
            let mut cost = 0.0;
            for c in 0..2 {
                let members: Vec<usize> = (0..n).filter(|&p| labels[p] == c).collect();
                let mean: Vec<f64> = (0..x.ncols())
                    .map(|j| members.iter().map(|&p| x[(p, j)]).sum::<f64>() / members.len() as f64)
                    .collect();
                for &p in &members {
                    cost += (0..x.ncols()).map(|j| (x[(p, j)] - mean[j]).powi(2)).sum::<f64>();
                }
            }
            if cost < best.0 {
                best = (cost, labels);
            }
        }
        best
    }

    #[test]
    fn identical_points_single_cluster() {
        let x = Matrix::from_element(6, 2, 3.5);
        assert_eq!(kmeans(&x, 1, 9).unwrap(), vec![0; 6]);
    }

    #[test]
    fn two_groups_match_exhaustive_optimum() {
        let x = from_rows(&[
            vec![0.0, 0.0],
            vec![0.01, 0.0],
            vec![0.0, -0.01],
            vec![100.0, 100.0],
            vec![100.01, 100.0],
            vec![99.99, 100.01],
        ])
        .unwrap();
        let fit = kmeans_fit(&x, 2, 1, &KMeansParams::default()).unwrap();
        let (oracle_cost, oracle_labels) = best_two_partition(&x);
        assert!((fit.cost - oracle_cost).abs() < 1e-9);
        let same = |a: &[usize], b: &[usize]| {
            (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
        };
        assert!(same(&fit.labels, &oracle_labels));
    }

    #[test]
    fn k_equals_n_is_zero_cost() {
        let x = from_rows(&[vec![0.0], vec![1.0], vec![5.0], vec![7.5]]).unwrap();
        let fit = kmeans_fit(&x, 4, 3, &KMeansParams::default()).unwrap();
        assert_eq!(fit.cost, 0.0);
        let mut labels = fit.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let x = Matrix::zeros(2, 1);
        assert!(matches!(kmeans(&x, 3, 0), Err(Error::Validation(_))));
        assert!(kmeans(&x, 0, 0).is_err());
    }

    #[test]
    fn same_seed_same_labels() {
        let x = Matrix::from_fn(40, 3, |i, j| ((i * 7 + j * 13) % 11) as f64 * 0.37);
        assert_eq!(kmeans(&x, 4, 17).unwrap(), kmeans(&x, 4, 17).unwrap());
    }
}
