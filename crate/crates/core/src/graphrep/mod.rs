//! Graph views of a set cover instance and the per-node features derived
//! from them.
//!
//! The tripartite graph has a single Universe node pointing at every
//! element, and each element pointing at the columns that cover it. Node
//! ids are `0` for the Universe, `1..=m` for elements and `m+1..=m+n` for
//! columns. The hypergraph view treats elements as vertices and columns as
//! weighted hyperedges.

mod eigen;
mod features;
mod hypergraph;
mod rwr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{InstanceError, ScpInstance};

pub use eigen::{lanczos_ritz_values, symmetric_eigenvalues, DenseMatrix};
pub use features::{
    assemble_features, features_csv, raw_features, FeatureMatrix, FEATURE_COUNT, FEATURE_SCHEMA,
    FEATURE_SCHEMA_VERSION,
};
pub use hypergraph::{
    algebraic_connectivity, edge_contribution, hypergraph_spectra, ChainSpectrum, Hypergraph, HypergraphSpectra,
    DENSE_EIGEN_LIMIT, LANCZOS_STEPS,
};
pub use rwr::{rwr_scores, DEFAULT_RESTART_P, RWR_MAX_SWEEPS, RWR_TOLERANCE};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("random walk did not converge within {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,
    #[error("restart probability must lie in (0, 1], got {0}")]
    InvalidRestart(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    Universe,
    Element,
    Column,
}

impl Layer {
    pub fn label(self) -> &'static str {
        match self {
            Layer::Universe => "universe",
            Layer::Element => "element",
            Layer::Column => "column",
        }
    }
}

/// Directed graph with layer tags. Keeps out-, in- and undirected
/// adjacency; the undirected lists are what message passing aggregates over.
#[derive(Debug, Clone, PartialEq)]
pub struct ScpGraph {
    m: usize,
    n: usize,
    layers: Vec<Layer>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl ScpGraph {
    /// Arbitrary layered digraph. Node 0 is the restart target for random
    /// walks. Duplicate edges are dropped.
    pub fn from_edges(layers: Vec<Layer>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let count = layers.len();
        let mut out_adj = vec![Vec::new(); count];
        let mut in_adj = vec![Vec::new(); count];
        for &(a, b) in edges {
            if a >= count || b >= count {
                return Err(GraphError::InvalidGraph(format!("edge ({a}, {b}) outside {count} nodes")));
            }
            out_adj[a].push(b);
            in_adj[b].push(a);
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let edge_count = out_adj.iter().map(Vec::len).sum();
        let neighbors = (0..count)
            .map(|v| {
                let mut nb: Vec<usize> = out_adj[v].iter().chain(&in_adj[v]).copied().collect();
                nb.sort_unstable();
                nb.dedup();
                nb
            })
            .collect();
        Ok(ScpGraph {
            m: layers.iter().filter(|&&l| l == Layer::Element).count(),
            n: layers.iter().filter(|&&l| l == Layer::Column).count(),
            layers,
            out_adj,
            in_adj,
            neighbors,
            edge_count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.layers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of Element nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of Column nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layer(&self, v: usize) -> Layer {
        self.layers[v]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    /// In- and out-neighbors, deduplicated.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Node ids of the Column layer in column order.
    pub fn column_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.layers[v] == Layer::Column)
            .collect()
    }

    /// Reorders every undirected neighbor list without changing the graph.
    /// Aggregations over neighbors must not depend on this order.
    pub fn shuffle_neighbor_order(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for list in &mut self.neighbors {
            list.shuffle(&mut rng);
        }
    }
}

pub fn element_node(i: usize) -> usize {
    1 + i
}

pub fn column_node(m: usize, j: usize) -> usize {
    1 + m + j
}

pub fn build_tripartite(inst: &ScpInstance) -> ScpGraph {
    let (m, n) = (inst.m(), inst.n());
    let mut layers = vec![Layer::Universe];
    layers.extend(std::iter::repeat_n(Layer::Element, m));
    layers.extend(std::iter::repeat_n(Layer::Column, n));
    let mut edges = Vec::with_capacity(m + inst.nnz());
    for i in 0..m {
        edges.push((0, element_node(i)));
    }
    for (i, row) in inst.rows().iter().enumerate() {
        edges.extend(row.iter().map(|&j| (element_node(i), column_node(m, j))));
    }
    ScpGraph::from_edges(layers, &edges).expect("tripartite edges are in range")
}

/// `(degree, average neighbor degree)` per node on the undirected view.
pub fn degree_features(graph: &ScpGraph) -> Vec<(usize, f64)> {
    let degree: Vec<usize> = (0..graph.node_count()).map(|v| graph.neighbors(v).len()).collect();
    (0..graph.node_count())
        .map(|v| {
            let nb = graph.neighbors(v);
            let avg = if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&w| degree[w] as f64).sum::<f64>() / nb.len() as f64
            };
            (degree[v], avg)
        })
        .collect()
}
