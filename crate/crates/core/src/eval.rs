//! Latent-space classifiers and accuracy metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{squared_distance, Matrix};

fn check_train(train: &Matrix, labels: &[u32], test: &Matrix) -> Result<()> {
    if train.nrows() == 0 {
        return Err(Error::validation("training set is empty"));
    }
    if labels.len() != train.nrows() {
        return Err(Error::dimension(format!(
            "{} training labels for {} instances",
            labels.len(),
            train.nrows()
        )));
    }
    if test.nrows() > 0 && test.ncols() != train.ncols() {
        return Err(Error::dimension(format!(
            "train has {} features, test has {}",
            train.ncols(),
            test.ncols()
        )));
    }
    Ok(())
}

/// Nearest training instance by Euclidean distance; ties go to the lower
/// training index.
pub fn one_nn_classify(train: &Matrix, labels: &[u32], test: &Matrix) -> Result<Vec<u32>> {
    check_train(train, labels, test)?;
    Ok((0..test.nrows())
        .into_par_iter()
        .map(|t| {
            let row = test.row(t);
            let mut best = (f64::INFINITY, 0);
            for p in 0..train.nrows() {
                let d = (train.row(p) - row).norm_squared();
                if d < best.0 {
                    best = (d, p);
                }
            }
            labels[best.1]
        })
        .collect())
}

fn majority(labels: &[u32]) -> u32 {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    // BTreeMap iterates ascending, so `>` keeps the lower id on ties
    let mut best = (0, 0);
    for (l, c) in counts {
        if c > best.1 {
            best = (l, c);
        }
    }
    best.0
}

/// One-vs-rest ridge regression on ±1 targets with an unpenalized bias.
/// The highest score wins; ties go to the lower class id.
pub fn linear_classify(train: &Matrix, labels: &[u32], test: &Matrix, ridge: f64) -> Result<Vec<u32>> {
    check_train(train, labels, test)?;
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::validation(format!("ridge must be positive, got {ridge}")));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let degenerate = (1..train.nrows()).all(|p| squared_distance(train, 0, p) == 0.0);
    if classes.len() == 1 || degenerate {
        return Ok(vec![majority(labels); test.nrows()]);
    }

    let (n, m) = train.shape();
    let xa = Matrix::from_fn(n, m + 1, |p, j| if j < m { train[(p, j)] } else { 1.0 });
    let mut gram = xa.transpose() * &xa;
    for j in 0..m {
        gram[(j, j)] += ridge;
    }
    let targets = Matrix::from_fn(n, classes.len(), |p, c| if labels[p] == classes[c] { 1.0 } else { -1.0 });
    let rhs = xa.transpose() * targets;
    let weights = Cholesky::new(gram)
        .ok_or_else(|| Error::Singular("ridge system is not positive definite".into()))?
        .solve(&rhs);

    Ok((0..test.nrows())
        .map(|t| {
            let mut best = (f64::NEG_INFINITY, classes[0]);
            for (c, &class) in classes.iter().enumerate() {
                let score = (0..m).map(|j| test[(t, j)] * weights[(j, c)]).sum::<f64>() + weights[(m, c)];
                if score > best.0 {
                    best = (score, class);
                }
            }
            best.1
        })
        .collect())
}

/// Rows are true classes, columns predicted classes; class `c` sits at
/// index `c − 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[u32], predicted: &[u32], class_count: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::validation(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut counts = vec![vec![0u64; class_count]; class_count];
        for (&t, &p) in truth.iter().zip(predicted) {
            for l in [t, p] {
                if l == 0 || l as usize > class_count {
                    return Err(Error::validation(format!("label {l} outside 1..={class_count}")));
                }
            }
            counts[t as usize - 1][p as usize - 1] += 1;
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

/// Parameters recorded alongside a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub algorithm: String,
    pub mu: Option<f64>,
    pub dn: Option<usize>,
    pub bins: Option<usize>,
    pub overlap: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Recall per class; `None` for classes absent from the evaluated set.
    pub per_class: Vec<Option<f64>>,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub confusion: ConfusionMatrix,
    pub meta: RunMetadata,
}

/// OA, AA and Cohen's kappa of `predicted` against `truth`.
///
/// Kappa is computed from integer sums as
/// `(N·tr − Σ r_i c_i) / (N² − Σ r_i c_i)` and is 0 when chance agreement
/// is 1. AA averages only over classes present in `truth`.
pub fn evaluate(truth: &[u32], predicted: &[u32], class_count: usize) -> Result<EvalReport> {
    let confusion = ConfusionMatrix::from_labels(truth, predicted, class_count)?;
    let n = confusion.total();
    let per_class: Vec<Option<f64>> = (0..class_count)
        .map(|i| {
            let r = confusion.row_sum(i);
            (r > 0).then(|| confusion.counts[i][i] as f64 / r as f64)
        })
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let aa = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    let oa = if n == 0 { 0.0 } else { confusion.trace() as f64 / n as f64 };
    let chance: u128 = (0..class_count)
        .map(|i| confusion.row_sum(i) as u128 * confusion.col_sum(i) as u128)
        .sum();
    let n2 = n as u128 * n as u128;
    let kappa = if chance == n2 {
        0.0
    } else {
        let agree = n as u128 * confusion.trace() as u128;
        (agree as f64 - chance as f64) / (n2 - chance) as f64
    };
    Ok(EvalReport {
        per_class,
        oa,
        aa,
        kappa,
        confusion,
        meta: RunMetadata::default(),
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".into(), T::to_string)
}

impl EvalReport {
    pub fn with_meta(mut self, meta: RunMetadata) -> Self {
        self.meta = meta;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("bad report json: {e}")))
    }

    /// Tab-separated `key value` lines: run parameters, per-class accuracy,
    /// then the summary metrics.
    pub fn to_tsv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        for (k, v) in [
            ("algorithm", m.algorithm.clone()),
            ("mu", opt(&m.mu)),
            ("dn", opt(&m.dn)),
            ("bins", opt(&m.bins)),
            ("overlap", opt(&m.overlap)),
            ("k", opt(&m.k)),
            ("seed", opt(&m.seed)),
        ] {
            let _ = writeln!(out, "{k}\t{v}");
        }
        for (i, acc) in self.per_class.iter().enumerate() {
            let _ = writeln!(out, "class_{}\t{}", i + 1, opt(acc));
        }
        let _ = writeln!(out, "oa\t{}\naa\t{}\nkappa\t{}", self.oa, self.aa, self.kappa);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::from_rows;

    fn col(v: &[f64]) -> Matrix {
        Matrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn one_nn_examples() {
        let train = col(&[0.0, 5.0, 10.0]);
        assert_eq!(one_nn_classify(&train, &[1, 2, 3], &col(&[4.9, 10.0, -3.0])).unwrap(), vec![2, 3, 1]);
        assert_eq!(one_nn_classify(&col(&[1.0]), &[7], &col(&[-4.0, 9.0])).unwrap(), vec![7, 7]);
        // equidistant: lower training index wins
        assert_eq!(one_nn_classify(&col(&[0.0, 2.0]), &[1, 2], &col(&[1.0])).unwrap(), vec![1]);
        assert!(one_nn_classify(&Matrix::zeros(0, 1), &[], &col(&[1.0])).is_err());
        assert!(one_nn_classify(&train, &[1, 2], &col(&[1.0])).is_err());
    }

    #[test]
    fn one_nn_self_accuracy() {
        let x = from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0], vec![3.0, -1.0], vec![0.5, 0.2]]).unwrap();
        let labels = [1, 2, 1, 3];
        assert_eq!(one_nn_classify(&x, &labels, &x).unwrap(), labels);
    }

    #[test]
    fn linear_separates_1d() {
        let train = col(&[-3.0, -2.0, -1.5, 1.0, 2.0, 4.0]);
        let labels = [1, 1, 1, 2, 2, 2];
        let pred = linear_classify(&train, &labels, &col(&[-2.5, -0.8, 0.9, 3.0]), 1e-2).unwrap();
        assert_eq!(pred, vec![1, 1, 2, 2]);
        assert_eq!(linear_classify(&train, &labels, &train, 1e-2).unwrap(), labels);
    }

    #[test]
    fn linear_degenerate_cases() {
        assert_eq!(linear_classify(&col(&[1.0, 2.0]), &[4, 4], &col(&[9.0]), 1.0).unwrap(), vec![4]);
        let same = col(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(linear_classify(&same, &[3, 1, 3, 1], &col(&[0.0]), 1.0).unwrap(), vec![1]);
        assert_eq!(linear_classify(&same, &[3, 1, 3, 3], &col(&[0.0]), 1.0).unwrap(), vec![3]);
        assert!(linear_classify(&same, &[3, 1, 3, 3], &col(&[0.0]), 0.0).is_err());
    }

    fn from_counts(counts: &[[usize; 2]; 2]) -> (Vec<u32>, Vec<u32>) {
        let (mut t, mut p) = (vec![], vec![]);
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                t.extend(std::iter::repeat_n(i as u32 + 1, c));
                p.extend(std::iter::repeat_n(j as u32 + 1, c));
            }
        }
        (t, p)
    }

    #[test]
    fn kappa_examples() {
        let (t, p) = from_counts(&[[40, 10], [20, 30]]);
        let r = evaluate(&t, &p, 2).unwrap();
        assert!((r.oa - 0.7).abs() < 1e-15);
        assert!((r.kappa - 0.4).abs() < 1e-15);
        assert!((r.aa - 0.7).abs() < 1e-15);

        let (t, p) = from_counts(&[[50, 0], [50, 0]]);
        let r = evaluate(&t, &p, 2).unwrap();
        assert_eq!((r.oa, r.kappa), (0.5, 0.0));

        let r = evaluate(&[1, 2, 3], &[1, 2, 3], 3).unwrap();
        assert_eq!((r.oa, r.aa, r.kappa), (1.0, 1.0, 1.0));
    }

    #[test]
    fn degenerate_chance_gives_zero_kappa() {
        let r = evaluate(&[2, 2, 2], &[2, 2, 2], 3).unwrap();
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.per_class, vec![None, Some(1.0), None]);
        assert_eq!(r.aa, 1.0);
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        assert!(matches!(evaluate(&[1, 2], &[1], 2), Err(Error::Validation(_))));
        assert!(evaluate(&[1, 3], &[1, 2], 2).is_err());
        assert!(evaluate(&[0], &[1], 2).is_err());
    }

    #[test]
    fn report_serializations() {
        let r = evaluate(&[1, 2, 2], &[1, 2, 1], 2).unwrap().with_meta(RunMetadata {
            algorithm: "mima".into(),
            mu: Some(1.0),
            dn: Some(3),
            seed: Some(7),
            ..Default::default()
        });
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
        let tsv = r.to_tsv();
        assert!(tsv.starts_with("algorithm\tmima\nmu\t1\ndn\t3\nbins\t-\n"));
        assert!(tsv.contains("class_2\t0.5\n"));
        assert!(tsv.ends_with(&format!("kappa\t{}\n", r.kappa)));
    }
}
