use crate::error::{Error, Result};
use crate::numkit::{Matrix, Vector};

/// Per-dimension z-scoring fitted on training instances. Dimensions with zero
/// spread are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vector,
    pub std: Vector,
    /// Indices of the retained input dimensions.
    pub kept: Vec<usize>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let (n, m) = x.shape();
        if n == 0 || m == 0 {
            return Err(Error::validation("cannot standardize an empty matrix"));
        }
        let mean = Vector::from_iterator(m, x.column_iter().map(|c| c.mean()));
        let std = Vector::from_iterator(
            m,
            x.column_iter()
                .zip(mean.iter())
                .map(|(c, mu)| (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64).sqrt()),
        );
        let kept: Vec<usize> = (0..m)
            .filter(|&j| std[j] > 1e-12 * mean[j].abs().max(1.0))
            .collect();
        if kept.is_empty() {
            return Err(Error::validation("every feature is constant over the training instances"));
        }
        Ok(Self { mean, std, kept })
    }

    pub fn input_dims(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dims(&self) -> usize {
        self.kept.len()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.input_dims() {
            return Err(Error::dimension(format!(
                "standardizer fitted on {} features, got {}",
                self.input_dims(),
                x.ncols()
            )));
        }
        Ok(Matrix::from_fn(x.nrows(), self.kept.len(), |p, j| {
            let d = self.kept[j];
            (x[(p, d)] - self.mean[d]) / self.std[d]
        }))
    }
}
