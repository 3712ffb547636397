use super::{ensure_finite, sym_eig, Matrix, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pca {
    /// `m × k`, orthonormal columns ordered by decreasing variance.
    pub components: Matrix,
    /// `n × k` projections of the centered data.
    pub scores: Matrix,
    /// Sample variance (denominator `n − 1`) along each component.
    pub explained_variance: Vector,
    pub mean: Vector,
}

/// Principal component analysis of `x` (one instance per row).
pub fn pca(x: &Matrix, k: usize) -> Result<Pca> {
    let (n, m) = x.shape();
    ensure_finite(x, "pca input")?;
    let max_k = n.saturating_sub(1).min(m);
    if k == 0 || k > max_k {
        return Err(Error::validation(format!(
            "pca needs 1 <= k <= min(n-1, m) = {max_k}, got {k}"
        )));
    }
    let mean = Vector::from_iterator(m, x.column_iter().map(|c| c.mean()));
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = sym_eig(&cov)?;

    let mut components = Matrix::zeros(m, k);
    let mut explained = Vector::zeros(k);
    for j in 0..k {
        let src = m - 1 - j;
        components.set_column(j, &eig.vectors.column(src));
        explained[j] = eig.values[src].max(0.0);
    }
    let scores = &centered * &components;
    Ok(Pca {
        components,
        scores,
        explained_variance: explained,
        mean,
    })
}
