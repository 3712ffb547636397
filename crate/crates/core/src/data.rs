//! Feature sources and label containers.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::numkit::{ensure_finite, Matrix};

/// Class id 0 marks an unlabeled instance.
pub const UNLABELED: u32 = 0;

/// One sensor's features, one instance per row, with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    pub features: Matrix,
    pub labels: Option<Vec<u32>>,
}

impl DataSource {
    pub fn new(features: Matrix, labels: Option<Vec<u32>>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::validation("data source must have at least one instance and one feature"));
        }
        ensure_finite(&features, "data source")?;
        if let Some(labels) = &labels {
            if labels.len() != features.nrows() {
                return Err(Error::dimension(format!(
                    "{} labels for {} instances",
                    labels.len(),
                    features.nrows()
                )));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn unlabeled(features: Matrix) -> Result<Self> {
        Self::new(features, None)
    }

    pub fn instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn dims(&self) -> usize {
        self.features.ncols()
    }

    /// Label of instance `p`, [`UNLABELED`] when the source carries none.
    pub fn label(&self, p: usize) -> u32 {
        self.labels.as_ref().map_or(UNLABELED, |l| l[p])
    }
}

/// K sources aligned jointly. Instance `p` of source `i` has global index
/// `offset(i) + p` in every joint graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStack {
    pub sources: Vec<DataSource>,
}

impl LabeledStack {
    pub fn new(sources: Vec<DataSource>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::validation("a stack needs at least one source"));
        }
        Ok(Self { sources })
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn total_instances(&self) -> usize {
        self.sources.iter().map(DataSource::instances).sum()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sources.iter().map(DataSource::dims).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.sources.iter().map(DataSource::instances).collect()
    }

    pub fn offset(&self, source: usize) -> usize {
        self.sources[..source].iter().map(DataSource::instances).sum()
    }

    /// Labels of every instance in global order.
    pub fn joint_labels(&self) -> Vec<u32> {
        self.sources
            .iter()
            .flat_map(|s| (0..s.instances()).map(move |p| s.label(p)))
            .collect()
    }

    /// Sorted distinct class ids present among labeled instances.
    pub fn classes(&self) -> Vec<u32> {
        let mut c: Vec<u32> = self.joint_labels().into_iter().filter(|&l| l != UNLABELED).collect();
        c.sort_unstable();
        c.dedup();
        c
    }
}

/// Labels withheld from fusion and classification.
///
/// Every call to [`HeldOutLabels::reveal`] is counted so tests can prove that
/// nothing read them before evaluation.
#[derive(Debug)]
pub struct HeldOutLabels {
    labels: Vec<u32>,
    reads: AtomicUsize,
}

impl HeldOutLabels {
    pub fn new(labels: Vec<u32>) -> Self {
        Self {
            labels,
            reads: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn reveal(&self) -> &[u32] {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.labels
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }
}

impl Clone for HeldOutLabels {
    fn clone(&self) -> Self {
        Self::new(self.labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_and_joint_labels() {
        let a = DataSource::new(Matrix::zeros(2, 3), Some(vec![1, 0])).unwrap();
        let b = DataSource::new(Matrix::zeros(3, 1), None).unwrap();
        let stack = LabeledStack::new(vec![a, b]).unwrap();
        assert_eq!(stack.offset(1), 2);
        assert_eq!(stack.total_instances(), 5);
        assert_eq!(stack.joint_labels(), vec![1, 0, 0, 0, 0]);
        assert_eq!(stack.classes(), vec![1]);
    }

    #[test]
    fn rejects_label_length_mismatch_and_nan() {
        assert!(DataSource::new(Matrix::zeros(2, 1), Some(vec![1])).is_err());
        let mut m = Matrix::zeros(2, 1);
        m[(0, 0)] = f64::NAN;
        assert!(DataSource::unlabeled(m).is_err());
    }

    #[test]
    fn held_out_counts_reads() {
        let h = HeldOutLabels::new(vec![1, 2]);
        assert_eq!(h.reads(), 0);
        assert_eq!(h.len(), 2);
        let _ = h.reveal();
        assert_eq!(h.reads(), 1);
    }
}
