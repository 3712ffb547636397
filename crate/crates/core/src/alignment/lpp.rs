//! Locality preserving projections on the feature-wise concatenation of
//! co-registered sources.

use crate::data::{LabeledStack, UNLABELED};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::numkit::{default_regularization, gen_eig, graph_laplacian, knn_adjacency, Matrix};

use super::{hconcat, LatentDataset, ZERO_EIGENVALUE};

/// A fitted LPP map from concatenated features to `dn` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LppModel {
    /// `Σm_i × dn`.
    pub projection: Matrix,
    pub eigenvalues: Vec<f64>,
}

fn concatenated(stack: &LabeledStack) -> Result<Matrix> {
    let sizes = stack.sizes();
    if sizes.iter().any(|&n| n != sizes[0]) {
        return Err(Error::validation(format!(
            "concatenation needs equal instance counts per source, got {sizes:?}"
        )));
    }
    let blocks: Vec<Matrix> = stack.sources.iter().map(|s| s.features.clone()).collect();
    hconcat(&blocks)
}

/// Shared label of each co-registered instance. Sources that disagree on a
/// labeled instance are rejected.
fn shared_labels(stack: &LabeledStack) -> Result<Vec<u32>> {
    let n = stack.sizes()[0];
    let mut labels = vec![UNLABELED; n];
    for src in &stack.sources {
        for (p, slot) in labels.iter_mut().enumerate() {
            let l = src.label(p);
            if l == UNLABELED {
                continue;
            }
            if *slot != UNLABELED && *slot != l {
                return Err(Error::validation(format!("instance {p} carries labels {slot} and {l}")));
            }
            *slot = l;
        }
    }
    Ok(labels)
}

/// kNN graph of the concatenated features, joined with same-class pairs when
/// `semi` is set.
pub fn lpp_affinity(stack: &LabeledStack, k: usize, semi: bool) -> Result<SparseGraph> {
    let x = concatenated(stack)?;
    let mut g = knn_adjacency(&x, k)?;
    if semi {
        let labels = shared_labels(stack)?;
        for p in 0..labels.len() {
            for q in p + 1..labels.len() {
                if labels[p] != UNLABELED && labels[p] == labels[q] {
                    g.add_edge(p, q);
                }
            }
        }
    }
    Ok(g)
}

pub fn lpp_fit(stack: &LabeledStack, k: usize, dn: usize, semi: bool) -> Result<LppModel> {
    if dn == 0 {
        return Err(Error::validation("latent dimension must be at least 1"));
    }
    let x = concatenated(stack)?;
    let w = lpp_affinity(stack, k, semi)?;
    let (l, d) = graph_laplacian(&w);
    let a = x.transpose() * (l * &x);
    let b = x.transpose() * (d * &x);
    let eig = gen_eig(&a, &b, default_regularization(&b))?;
    let lambda_max = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = ZERO_EIGENVALUE * lambda_max.max(1.0);
    let usable: Vec<usize> = (0..eig.len()).filter(|&j| eig.values[j] >= threshold).collect();
    if usable.len() < dn {
        return Err(Error::Capacity {
            requested: dn,
            available: usable.len(),
        });
    }
    let chosen = &usable[..dn];
    Ok(LppModel {
        projection: Matrix::from_fn(x.ncols(), dn, |r, c| eig.vectors[(r, chosen[c])]),
        eigenvalues: chosen.iter().map(|&j| eig.values[j]).collect(),
    })
}

impl LppModel {
    /// Embeds co-registered instances given per-source features.
    pub fn apply(&self, sources: &[Matrix]) -> Result<Matrix> {
        let x = hconcat(sources)?;
        if x.ncols() != self.projection.nrows() {
            return Err(Error::dimension(format!(
                "model expects {} concatenated features, got {}",
                self.projection.nrows(),
                x.ncols()
            )));
        }
        Ok(x * &self.projection)
    }
}

fn fuse(stack: &LabeledStack, k: usize, dn: usize, semi: bool) -> Result<LatentDataset> {
    let model = lpp_fit(stack, k, dn, semi)?;
    let blocks: Vec<Matrix> = stack.sources.iter().map(|s| s.features.clone()).collect();
    Ok(LatentDataset {
        sources: vec![model.apply(&blocks)?],
        provenance: format!("mode={} k={k} dn={dn}", if semi { "lpp-se" } else { "lpp" }),
    })
}

/// Unsupervised joint embedding.
pub fn lpp_fuse(stack: &LabeledStack, k: usize, dn: usize) -> Result<LatentDataset> {
    fuse(stack, k, dn, false)
}

/// Joint embedding whose affinity also links same-class instances.
pub fn lppse_fuse(stack: &LabeledStack, k: usize, dn: usize) -> Result<LatentDataset> {
    fuse(stack, k, dn, true)
}
