use rayon::prelude::*;

use crate::data::{LabeledStack, UNLABELED};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::mapper::{mapper_graph, CoverSpec, FilterSpec, MapperGraph};
use crate::numkit::knn_adjacency;

/// How the per-source topology blocks are derived.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyMode {
    Knn { k: usize },
    Mapper {
        filter: FilterSpec,
        cover: CoverSpec,
        k_max: usize,
    },
}

impl TopologyMode {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyMode::Knn { .. } => "knn",
            TopologyMode::Mapper { .. } => "mapper",
        }
    }
}

/// Joint graphs over all `N = Σ n_i` instances of a stack.
#[derive(Debug, Clone)]
pub struct JointGraphs {
    pub similarity: SparseGraph,
    pub dissimilarity: SparseGraph,
    /// Block-diagonal topology (kNN or MAPPER blocks).
    pub topology: SparseGraph,
}

fn labeled_pairs(stack: &LabeledStack, same: bool) -> SparseGraph {
    let labels = stack.joint_labels();
    let labeled: Vec<usize> = (0..labels.len()).filter(|&p| labels[p] != UNLABELED).collect();
    let mut g = SparseGraph::new(labels.len());
    for (i, &p) in labeled.iter().enumerate() {
        for &q in &labeled[i + 1..] {
            if (labels[p] == labels[q]) == same {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// Joins every pair of labeled instances that share a class, within and
/// across sources.
pub fn build_similarity(stack: &LabeledStack) -> SparseGraph {
    labeled_pairs(stack, true)
}

/// Joins every pair of labeled instances with different classes.
pub fn build_dissimilarity(stack: &LabeledStack) -> SparseGraph {
    labeled_pairs(stack, false)
}

fn source_seed(seed: u64, source: usize) -> u64 {
    seed.wrapping_add((source as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Block-diagonal topology graph plus the MAPPER graphs behind each block
/// (empty in kNN mode).
pub fn build_topology_detailed(
    stack: &LabeledStack,
    mode: &TopologyMode,
    seed: u64,
) -> Result<(SparseGraph, Vec<MapperGraph>)> {
    let per_source: Vec<Result<(SparseGraph, Option<MapperGraph>)>> = stack
        .sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| match mode {
            TopologyMode::Knn { k } => Ok((knn_adjacency(&src.features, *k)?, None)),
            TopologyMode::Mapper { filter, cover, k_max } => {
                let g = mapper_graph(&src.features, filter, cover, *k_max, source_seed(seed, i))?;
                Ok((g.adjacency.clone(), Some(g)))
            }
        })
        .collect();
    let mut blocks = Vec::with_capacity(stack.len());
    let mut mappers = Vec::new();
    for r in per_source {
        let (block, mapper) = r?;
        blocks.push(block);
        mappers.extend(mapper);
    }
    Ok((SparseGraph::block_diagonal(&blocks), mappers))
}

pub fn build_topology(stack: &LabeledStack, mode: &TopologyMode, seed: u64) -> Result<SparseGraph> {
    Ok(build_topology_detailed(stack, mode, seed)?.0)
}

impl JointGraphs {
    pub fn build(stack: &LabeledStack, mode: &TopologyMode, seed: u64) -> Result<(Self, Vec<MapperGraph>)> {
        let (topology, mappers) = build_topology_detailed(stack, mode, seed)?;
        Ok((
            Self {
                similarity: build_similarity(stack),
                dissimilarity: build_dissimilarity(stack),
                topology,
            },
            mappers,
        ))
    }

    /// Checks sizes, similarity/dissimilarity disjointness and the zero
    /// off-source blocks of the topology graph.
    pub fn validate(&self, stack: &LabeledStack) -> Result<()> {
        let n = stack.total_instances();
        for (name, g) in [
            ("similarity", &self.similarity),
            ("dissimilarity", &self.dissimilarity),
            ("topology", &self.topology),
        ] {
            if g.len() != n {
                return Err(Error::dimension(format!("{name} graph has {} nodes, stack has {n}", g.len())));
            }
        }
        if let Some((p, q)) = self.similarity.edges().find(|&(p, q)| self.dissimilarity.has_edge(p, q)) {
            return Err(Error::validation(format!("pair ({p},{q}) is both similar and dissimilar")));
        }
        let source_of: Vec<usize> = stack
            .sizes()
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
            .collect();
        if let Some((p, q)) = self.topology.edges().find(|&(p, q)| source_of[p] != source_of[q]) {
            return Err(Error::validation(format!("topology links instances {p} and {q} of different sources")));
        }
        Ok(())
    }
}
