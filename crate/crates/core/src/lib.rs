//! MAPPER-induced manifold alignment.
//!
//! Learns per-source linear projections of heterogeneous feature sources into
//! a shared latent space. Label information contributes similarity and
//! dissimilarity graphs; the topology of each source comes either from a kNN
//! graph or from a MAPPER graph whose bins are split by spectral clustering.

pub mod alignment;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod mapper;
pub mod numkit;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use graph::SparseGraph;
pub use numkit::Matrix;
