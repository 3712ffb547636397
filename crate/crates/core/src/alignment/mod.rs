//! Semi-supervised manifold alignment.
//!
//! Label graphs pull same-class instances together and push different
//! classes apart across sources, while a block-diagonal topology graph keeps
//! each source's local structure. Minimizing `(A + μC) / B` over linear
//! projections reduces to the generalized eigenproblem
//! `Z(μL_t + L_s)Zᵀ x = λ Z L_d Zᵀ x`, where `Z` stacks the sources
//! block-diagonally.

mod graphs;
mod lpp;
mod standardize;

pub use graphs::{
    build_dissimilarity, build_similarity, build_topology, build_topology_detailed, JointGraphs, TopologyMode,
};
pub use lpp::{lpp_affinity, lpp_fit, lpp_fuse, lppse_fuse, LppModel};
pub use standardize::Standardizer;

use std::fmt::Write as _;

use crate::data::LabeledStack;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::numkit::{default_regularization, gen_eig, graph_laplacian, Matrix};

/// Eigenvalues below `ZERO_EIGENVALUE · max(1, λ_max)` are skipped.
pub const ZERO_EIGENVALUE: f64 = 1e-8;

/// Learned projections, one `m_i × dn` matrix per source.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    pub maps: Vec<Matrix>,
    pub dn: usize,
    pub mu: f64,
    pub mode: String,
    /// Generalized eigenvalue behind each latent dimension, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Per-source latent features, `n_i × dn` each.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDataset {
    pub sources: Vec<Matrix>,
    pub provenance: String,
}

impl LatentDataset {
    /// Side-by-side concatenation of co-registered sources.
    pub fn fused(&self) -> Result<Matrix> {
        hconcat(&self.sources)
    }
}

pub fn hconcat(blocks: &[Matrix]) -> Result<Matrix> {
    let n = blocks.first().map_or(0, Matrix::nrows);
    if blocks.iter().any(|b| b.nrows() != n) {
        return Err(Error::dimension("sources have different instance counts"));
    }
    let m: usize = blocks.iter().map(Matrix::ncols).sum();
    let mut out = Matrix::zeros(n, m);
    let mut col = 0;
    for b in blocks {
        out.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
    }
    Ok(out)
}

/// `Zᵀ`: `N × Σm_i`, instance rows placed in their source's column block.
fn stacked_features(stack: &LabeledStack) -> Matrix {
    let n = stack.total_instances();
    let m: usize = stack.dims().iter().sum();
    let mut zt = Matrix::zeros(n, m);
    let (mut row, mut col) = (0, 0);
    for src in &stack.sources {
        zt.view_mut((row, col), src.features.shape()).copy_from(&src.features);
        row += src.instances();
        col += src.dims();
    }
    zt
}

/// Builds `(Z(μL_t + L_s)Zᵀ, Z L_d Zᵀ)`.
pub fn assemble_problem(stack: &LabeledStack, graphs: &JointGraphs, mu: f64) -> Result<(Matrix, Matrix)> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::validation(format!("topology weight must be finite and >= 0, got {mu}")));
    }
    graphs.validate(stack)?;
    let zt = stacked_features(stack);
    let (ls, _) = graph_laplacian(&graphs.similarity);
    let (ld, _) = graph_laplacian(&graphs.dissimilarity);
    let (lt, _) = graph_laplacian(&graphs.topology);
    let left = lt * mu + ls;
    let a = zt.transpose() * (left * &zt);
    let b = zt.transpose() * (ld * &zt);
    Ok((a, b))
}

/// Smallest non-zero generalized eigenvectors, split into per-source maps.
pub fn solve_projections(a: &Matrix, b: &Matrix, dn: usize, dims: &[usize]) -> Result<ProjectionSet> {
    solve_projections_with(a, b, dn, dims, default_regularization(b))
}

pub fn solve_projections_with(a: &Matrix, b: &Matrix, dn: usize, dims: &[usize], reg: f64) -> Result<ProjectionSet> {
    if dn == 0 {
        return Err(Error::validation("latent dimension must be at least 1"));
    }
    let total: usize = dims.iter().sum();
    if total != a.nrows() {
        return Err(Error::dimension(format!(
            "source dimensions sum to {total}, problem has size {}",
            a.nrows()
        )));
    }
    let eig = gen_eig(a, b, reg)?;
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
    let mut maps = Vec::with_capacity(dims.len());
    let mut row = 0;
    for &m in dims {
        maps.push(Matrix::from_fn(m, dn, |r, c| eig.vectors[(row + r, chosen[c])]));
        row += m;
    }
    Ok(ProjectionSet {
        maps,
        dn,
        mu: 0.0,
        mode: String::new(),
        eigenvalues: chosen.iter().map(|&j| eig.values[j]).collect(),
    })
}

/// The three alignment costs, each summed over unordered instance pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerms {
    /// Spread of same-class pairs.
    pub similarity: f64,
    /// Spread of different-class pairs.
    pub dissimilarity: f64,
    /// Spread of topology-linked pairs (unweighted by μ).
    pub topology: f64,
}

impl CostTerms {
    /// `(A + μC) / B`.
    pub fn ratio(&self, mu: f64) -> f64 {
        (self.similarity + mu * self.topology) / self.dissimilarity
    }
}

fn graph_cost(g: &SparseGraph, latent: &Matrix) -> f64 {
    g.edges()
        .map(|(p, q)| (latent.row(p) - latent.row(q)).norm_squared())
        .sum()
}

pub fn cost_terms(stack: &LabeledStack, graphs: &JointGraphs, projections: &ProjectionSet) -> Result<CostTerms> {
    graphs.validate(stack)?;
    let latent = project(stack, projections)?;
    let all = vcat(&latent.sources);
    Ok(CostTerms {
        similarity: graph_cost(&graphs.similarity, &all),
        dissimilarity: graph_cost(&graphs.dissimilarity, &all),
        topology: graph_cost(&graphs.topology, &all),
    })
}

fn vcat(blocks: &[Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(Matrix::nrows).sum();
    let m = blocks.first().map_or(0, Matrix::ncols);
    let mut out = Matrix::zeros(n, m);
    let mut row = 0;
    for b in blocks {
        out.rows_mut(row, b.nrows()).copy_from(b);
        row += b.nrows();
    }
    out
}

impl ProjectionSet {
    pub fn sources(&self) -> usize {
        self.maps.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.maps.iter().map(Matrix::nrows).collect()
    }

    /// Maps instances (rows) of one source into the latent space.
    pub fn apply(&self, source: usize, x: &Matrix) -> Result<Matrix> {
        let map = self
            .maps
            .get(source)
            .ok_or_else(|| Error::dimension(format!("no projection for source {source}")))?;
        if x.ncols() != map.nrows() {
            return Err(Error::dimension(format!(
                "source {source} projection expects {} features, got {}",
                map.nrows(),
                x.ncols()
            )));
        }
        Ok(x * map)
    }

    /// Self-describing text form: a header followed by each source's map as
    /// whitespace-delimited rows.
    pub fn to_text(&self) -> String {
        let mut out = String::from("mima-projections 1\n");
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "sources {}", self.maps.len());
        let _ = writeln!(out, "dims {}", join(&mut self.dims().iter().map(|d| d.to_string())));
        let _ = writeln!(out, "dn {}", self.dn);
        let _ = writeln!(out, "mu {}", self.mu);
        let _ = writeln!(out, "mode {}", if self.mode.is_empty() { "-" } else { &self.mode });
        let _ = writeln!(out, "eigenvalues {}", join(&mut self.eigenvalues.iter().map(|v| v.to_string())));
        for (i, map) in self.maps.iter().enumerate() {
            let _ = writeln!(out, "source {i}");
            for r in map.row_iter() {
                let _ = writeln!(out, "{}", join(&mut r.iter().map(|v| v.to_string())));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cur = Cursor {
            lines: text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect(),
            pos: 0,
        };
        let (i, v) = cur.keyed("mima-projections")?;
        if v != ["1"] {
            return Err(parse_error(i, "unsupported format version"));
        }
        let (i, v) = cur.keyed("sources")?;
        let k: usize = num(first(&v), i)?;
        let (i, v) = cur.keyed("dims")?;
        let dims = v.iter().map(|s| num::<usize>(s, i)).collect::<Result<Vec<_>>>()?;
        if dims.len() != k {
            return Err(parse_error(i, format!("{} dims for {k} sources", dims.len())));
        }
        let (i, v) = cur.keyed("dn")?;
        let dn: usize = num(first(&v), i)?;
        let (i, v) = cur.keyed("mu")?;
        let mu: f64 = num(first(&v), i)?;
        let (_, v) = cur.keyed("mode")?;
        let mode = match first(&v) {
            "" | "-" => String::new(),
            m => m.to_owned(),
        };
        let (i, v) = cur.keyed("eigenvalues")?;
        let eigenvalues = v.iter().map(|s| num::<f64>(s, i)).collect::<Result<Vec<_>>>()?;
        let mut maps = Vec::with_capacity(k);
        for (src, &m) in dims.iter().enumerate() {
            let (i, v) = cur.keyed("source")?;
            if v != [src.to_string()] {
                return Err(parse_error(i, format!("expected block for source {src}")));
            }
            let mut map = Matrix::zeros(m, dn);
            for r in 0..m {
                let (i, l) = cur.next(&format!("row {r} of source {src}"))?;
                let vals = l.split_whitespace().map(|s| num::<f64>(s, i)).collect::<Result<Vec<_>>>()?;
                if vals.len() != dn {
                    return Err(parse_error(i, format!("expected {dn} values, found {}", vals.len())));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    map[(r, c)] = v;
                }
            }
            maps.push(map);
        }
        Ok(Self {
            maps,
            dn,
            mu,
            mode,
            eigenvalues,
        })
    }
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.lines.last().map_or(0, |l| l.0 + 1);
        let item = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| parse_error(last, format!("missing {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (i, l) = self.next(&format!("'{key}' line"))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(parse_error(i, format!("expected '{key}'")));
        }
        Ok((i, parts.collect()))
    }
}

fn first<'a>(v: &[&'a str]) -> &'a str {
    v.first().copied().unwrap_or("")
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: "<projections>".into(),
        line: line + 1,
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| parse_error(line, format!("bad number '{s}'")))
}

/// Applies each source's projection to that source's instances.
pub fn project(stack: &LabeledStack, projections: &ProjectionSet) -> Result<LatentDataset> {
    if stack.len() != projections.sources() {
        return Err(Error::dimension(format!(
            "{} sources but {} projections",
            stack.len(),
            projections.sources()
        )));
    }
    let sources = stack
        .sources
        .iter()
        .enumerate()
        .map(|(i, s)| projections.apply(i, &s.features))
        .collect::<Result<Vec<_>>>()?;
    Ok(LatentDataset {
        sources,
        provenance: format!(
            "mode={} mu={} dn={}",
            if projections.mode.is_empty() { "-" } else { &projections.mode },
            projections.mu,
            projections.dn
        ),
    })
}

/// Complete alignment: graphs, problem assembly and eigensolve.
pub fn align(
    stack: &LabeledStack,
    mode: &TopologyMode,
    mu: f64,
    dn: usize,
    seed: u64,
) -> Result<(ProjectionSet, JointGraphs, Vec<crate::mapper::MapperGraph>)> {
    let (graphs, mappers) = JointGraphs::build(stack, mode, seed)?;
    let (a, b) = assemble_problem(stack, &graphs, mu)?;
    let mut set = solve_projections(&a, &b, dn, &stack.dims())?;
    set.mu = mu;
    set.mode = match mode {
        TopologyMode::Knn { .. } => "ssma".into(),
        TopologyMode::Mapper { .. } => "mima".into(),
    };
    Ok((set, graphs, mappers))
}
