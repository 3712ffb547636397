//! Dense linear-algebra and clustering kernels.
//!
//! Data matrices are stored with one instance per row (`n × m`). Every kernel
//! here is a pure function of its inputs; seeded kernels are bit-reproducible.

mod eigen;
mod kmeans;
mod knn;
mod pca;

pub use eigen::{default_regularization, gen_eig, sym_eig, EigenPairs};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit, KMeansParams};
pub use knn::knn_adjacency;
pub use pca::{pca, Pca};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Rejects matrices containing NaN or infinite entries.
pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    match m.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(idx) => {
            // column-major storage
            let (r, c) = (idx % m.nrows(), idx / m.nrows());
            Err(Error::validation(format!("{what} has a non-finite entry at ({r},{c})")))
        }
    }
}

pub(crate) fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::dimension(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Builds a row-major matrix from nested rows. All rows must have equal length.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::dimension(format!(
            "row {bad} has {} entries, expected {m}",
            rows[bad].len()
        )));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn squared_distance(x: &Matrix, p: usize, q: usize) -> f64 {
    x.row(p)
        .iter()
        .zip(x.row(q).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// All pairwise squared Euclidean distances between rows.
pub fn pairwise_sq_distances(x: &Matrix) -> Matrix {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|p| (0..n).map(|q| squared_distance(x, p, q)).collect())
        .collect();
    Matrix::from_fn(n, n, |p, q| rows[p][q])
}

/// Returns the combinatorial Laplacian `L = D − W` and the degree matrix `D`.
///
/// `W` must be symmetric with non-negative entries.
pub fn laplacian(w: &Matrix) -> Result<(Matrix, Matrix)> {
    ensure_square(w, "weight matrix")?;
    ensure_finite(w, "weight matrix")?;
    let n = w.nrows();
    let scale = w.amax().max(1.0);
    for p in 0..n {
        for q in p..n {
            if (w[(p, q)] - w[(q, p)]).abs() > 1e-12 * scale {
                return Err(Error::validation(format!("weight matrix asymmetric at ({p},{q})")));
            }
            if w[(p, q)] < 0.0 {
                return Err(Error::validation(format!("negative weight at ({p},{q})")));
            }
        }
    }
    let degrees = Vector::from_iterator(n, w.row_iter().map(|r| r.sum()));
    let d = Matrix::from_diagonal(&degrees);
    Ok((&d - w, d))
}

/// Laplacian of an unweighted graph.
pub fn graph_laplacian(g: &SparseGraph) -> (Matrix, Matrix) {
    let n = g.len();
    let mut l = Matrix::zeros(n, n);
    let mut d = Matrix::zeros(n, n);
    for p in 0..n {
        let deg = g.degree(p) as f64;
        d[(p, p)] = deg;
        l[(p, p)] = deg;
        for q in g.neighbors(p) {
            l[(p, q)] = -1.0;
        }
    }
    (l, d)
}
