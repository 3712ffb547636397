//! MAPPER: filter, overlapping cover, per-bin spectral clustering and the
//! instance-level adjacency induced by the resulting cluster graph.

mod cover;
mod filter;
mod spectral;

pub use cover::{assign_bins, build_cover, BinAssignment, CoverSpec, Interval};
pub use filter::{compute_filter, CustomFilter, FilterSpec};
pub use spectral::{
    eigengap_k, spectral_cluster_auto, SpectralClustering, BANDWIDTH_QUANTILE, DEFAULT_K_MAX,
    NEAR_ZERO_EIGENVALUE,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::numkit::Matrix;

/// One cluster found inside one bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapperNode {
    pub bin: usize,
    pub cluster: usize,
    /// Global instance indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MapperGraph {
    pub nodes: Vec<MapperNode>,
    /// Node pairs `(u, v)`, `u < v`, whose member sets intersect.
    pub edges: Vec<(usize, usize)>,
    /// Instance-level adjacency: co-clustered instances and instances in
    /// linked clusters are joined.
    pub adjacency: SparseGraph,
    pub intervals: Vec<Interval>,
    /// Cluster count chosen in each bin (0 for empty bins).
    pub clusters_per_bin: Vec<usize>,
}

fn bin_seed(seed: u64, bin: usize) -> u64 {
    seed ^ (bin as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs MAPPER on one source (rows of `x` are instances).
pub fn mapper_graph(
    x: &Matrix,
    filter: &FilterSpec,
    cover: &CoverSpec,
    k_max: usize,
    seed: u64,
) -> Result<MapperGraph> {
    let values = compute_filter(x, filter)?;
    let intervals = build_cover(&values, cover)?;
    let bins = assign_bins(&values, &intervals);
    let n = x.nrows();

    let per_bin: Vec<Result<Vec<Vec<usize>>>> = bins
        .bins
        .par_iter()
        .enumerate()
        .map(|(b, members)| {
            if members.is_empty() {
                return Ok(vec![]);
            }
            let sub = x.select_rows(members.iter());
            let clustering = spectral_cluster_auto(&sub, k_max, bin_seed(seed, b))?;
            let mut groups = vec![Vec::new(); clustering.k];
            for (&global, &label) in members.iter().zip(&clustering.labels) {
                groups[label].push(global);
            }
            Ok(groups)
        })
        .collect();

    let mut nodes = Vec::new();
    let mut clusters_per_bin = Vec::with_capacity(per_bin.len());
    for (bin, groups) in per_bin.into_iter().enumerate() {
        let groups = groups?;
        clusters_per_bin.push(groups.len());
        for (cluster, members) in groups.into_iter().enumerate() {
            nodes.push(MapperNode { bin, cluster, members });
        }
    }

    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, node) in nodes.iter().enumerate() {
        for &p in &node.members {
            containing[p].push(u);
        }
    }
    let mut edge_set = BTreeSet::new();
    for owners in &containing {
        for (i, &u) in owners.iter().enumerate() {
            for &v in &owners[i + 1..] {
                edge_set.insert((u.min(v), u.max(v)));
            }
        }
    }
    let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();

    let mut adjacency = SparseGraph::new(n);
    for node in &nodes {
        for (i, &p) in node.members.iter().enumerate() {
            for &q in &node.members[i + 1..] {
                adjacency.add_edge(p, q);
            }
        }
    }
    for &(u, v) in &edges {
        for &p in &nodes[u].members {
            for &q in &nodes[v].members {
                adjacency.add_edge(p, q);
            }
        }
    }

    Ok(MapperGraph {
        nodes,
        edges,
        adjacency,
        intervals,
        clusters_per_bin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: usize,
    pub bin: usize,
    pub members: Vec<usize>,
}

/// JSON document shape consumed by external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperGraphDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<[usize; 2]>,
}

impl MapperGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of connected components of the node graph.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        let mut count = self.nodes.len();
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
                count -= 1;
            }
        }
        count
    }

    /// First Betti number of the node graph: `|E| − |V| + components`.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.components() - self.nodes.len()
    }

    pub fn to_doc(&self) -> MapperGraphDoc {
        MapperGraphDoc {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeDoc {
                    id,
                    bin: n.bin,
                    members: n.members.clone(),
                })
                .collect(),
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("mapper document serializes")
    }

    /// Graphviz rendering; node labels read `bin:cluster:size`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph mapper {\n");
        for (id, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "  n{id} [label=\"{}:{}:{}\"];", n.bin, n.cluster, n.members.len());
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "  n{u} -- n{v};");
        }
        out.push_str("}\n");
        out
    }
}

impl MapperGraphDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("bad mapper graph json: {e}")))
    }
}
