//! Spectral clustering with the cluster count chosen by the eigen-gap.

use crate::error::{Error, Result};
use crate::numkit::{ensure_finite, kmeans, pairwise_sq_distances, sym_eig, Matrix};

/// Eigenvalues of the normalized Laplacian below this are treated as
/// belonging to near-disconnected components.
pub const NEAR_ZERO_EIGENVALUE: f64 = 0.01;

/// Pairwise-distance quantile used as the Gaussian bandwidth.
pub const BANDWIDTH_QUANTILE: f64 = 0.2;

pub const DEFAULT_K_MAX: usize = 8;

#[derive(Debug, Clone)]
pub struct SpectralClustering {
    /// Cluster per instance, numbered by first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    /// Ascending eigenvalues of the normalized Laplacian (empty when skipped).
    pub eigenvalues: Vec<f64>,
    pub bandwidth: f64,
}

impl SpectralClustering {
    fn single(n: usize, eigenvalues: Vec<f64>, bandwidth: f64) -> Self {
        Self {
            labels: vec![0; n],
            k: 1,
            eigenvalues,
            bandwidth,
        }
    }
}

/// Linear-interpolated quantile of an unsorted sample.
fn quantile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = q * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
}

/// Picks `k` maximizing `λ_{k+1} − λ_k` among `k ≤ k_max` whose `λ_k` is
/// near zero. Ties go to the smaller `k`.
pub fn eigengap_k(eigenvalues: &[f64], k_max: usize) -> usize {
    let limit = k_max.min(eigenvalues.len().saturating_sub(1));
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..=limit {
        if eigenvalues[k - 1] >= NEAR_ZERO_EIGENVALUE {
            break;
        }
        let gap = eigenvalues[k] - eigenvalues[k - 1];
        if gap > best.1 {
            best = (k, gap);
        }
    }
    best.0
}

fn relabel_by_first_appearance(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    let out = labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (out, next)
}

/// Clusters the rows of `x`, choosing the number of clusters from the
/// spectrum of the normalized Laplacian `I − D^{-1/2} A D^{-1/2}` of a
/// Gaussian affinity.
pub fn spectral_cluster_auto(x: &Matrix, k_max: usize, seed: u64) -> Result<SpectralClustering> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::validation("cannot cluster an empty bin"));
    }
    if k_max == 0 {
        return Err(Error::validation("k_max must be at least 1"));
    }
    ensure_finite(x, "bin data")?;
    if n == 1 {
        return Ok(SpectralClustering::single(1, vec![], 0.0));
    }

    let d2 = pairwise_sq_distances(x);
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
        .map(|(p, q)| d2[(p, q)].sqrt())
        .collect();
    let mut bandwidth = quantile(&mut dists, BANDWIDTH_QUANTILE);
    if bandwidth == 0.0 {
        // many duplicates: fall back to the positive distances only
        let mut positive: Vec<f64> = dists.into_iter().filter(|&d| d > 0.0).collect();
        if positive.is_empty() {
            return Ok(SpectralClustering::single(n, vec![], 0.0));
        }
        bandwidth = quantile(&mut positive, BANDWIDTH_QUANTILE);
    }

    let denom = 2.0 * bandwidth * bandwidth;
    let affinity = Matrix::from_fn(n, n, |p, q| if p == q { 0.0 } else { (-d2[(p, q)] / denom).exp() });
    let inv_sqrt: Vec<f64> = affinity
        .row_iter()
        .map(|r| {
            let deg = r.sum();
            if deg > 0.0 {
                deg.sqrt().recip()
            } else {
                0.0
            }
        })
        .collect();
    // isolated vertices get a zero diagonal so they count as their own component
    let lsym = Matrix::from_fn(n, n, |p, q| {
        let base = if p == q && inv_sqrt[p] > 0.0 { 1.0 } else { 0.0 };
        base - inv_sqrt[p] * affinity[(p, q)] * inv_sqrt[q]
    });
    let eig = sym_eig(&lsym)?;
    let eigenvalues: Vec<f64> = eig.values.iter().copied().collect();
    let k = eigengap_k(&eigenvalues, k_max);
    if k == 1 {
        return Ok(SpectralClustering::single(n, eigenvalues, bandwidth));
    }

    let mut embedding = eig.vectors.columns(0, k).into_owned();
    for mut row in embedding.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let raw = kmeans(&embedding, k, seed)?;
    let (labels, k) = relabel_by_first_appearance(&raw);
    Ok(SpectralClustering {
        labels,
        k,
        eigenvalues,
        bandwidth,
    })
}
