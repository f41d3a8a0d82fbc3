//! Per-node feature matrix.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::hypergraph::{hypergraph_spectra, Hypergraph};
use super::rwr::{rwr_scores, DEFAULT_RESTART_P};
use super::{build_tripartite, degree_features, GraphError, Layer, ScpGraph};
use crate::instance::ScpInstance;

pub const FEATURE_COUNT: usize = 7;
pub const FEATURE_SCHEMA: [&str; FEATURE_COUNT] = [
    "cost",
    "cover",
    "rwr",
    "degree",
    "avg_neighbor_degree",
    "hyper_vertex",
    "hyper_edge",
];
pub const FEATURE_SCHEMA_VERSION: &str = "gscp-features-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub schema_version: String,
    rows: Vec<[f64; FEATURE_COUNT]>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<[f64; FEATURE_COUNT]>) -> Self {
        FeatureMatrix {
            schema_version: FEATURE_SCHEMA_VERSION.to_string(),
            rows,
        }
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, v: usize) -> &[f64; FEATURE_COUNT] {
        &self.rows[v]
    }

    pub fn rows(&self) -> &[[f64; FEATURE_COUNT]] {
        &self.rows
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    /// Scales every column to `[0, 1]`; constant columns become 0.
    pub fn normalized(&self) -> FeatureMatrix {
        let mut rows = self.rows.clone();
        for k in 0..FEATURE_COUNT {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[k]), hi.max(r[k])));
            let span = hi - lo;
            for r in &mut rows {
                r[k] = if span > 0.0 { ((r[k] - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
            }
        }
        FeatureMatrix::new(rows)
    }
}

/// Nodes of one layer ordered by descending degree, then ascending id.
fn pairing_order(graph: &ScpGraph, layer: Layer, degree: &[(usize, f64)]) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..graph.node_count()).filter(|&v| graph.layer(v) == layer).collect();
    nodes.sort_by(|&a, &b| degree[b].0.cmp(&degree[a].0).then(a.cmp(&b)));
    nodes
}

/// Features before normalization.
pub fn raw_features(inst: &ScpInstance) -> Result<(ScpGraph, FeatureMatrix), GraphError> {
    let graph = build_tripartite(inst);
    let m = inst.m();
    let mut rows = vec![[0.0; FEATURE_COUNT]; graph.node_count()];

    for i in 0..m {
        rows[1 + i][1] = 1.0;
    }
    for j in 0..inst.n() {
        rows[1 + m + j][0] = inst.cost(j).as_f64();
        rows[1 + m + j][1] = inst.col(j).len() as f64;
    }

    let rwr = rwr_scores(&graph, DEFAULT_RESTART_P)?;
    for (r, s) in rows.iter_mut().zip(&rwr).skip(1) {
        r[2] = *s;
    }

    let degree = degree_features(&graph);
    for (r, &(d, avg)) in rows.iter_mut().zip(&degree) {
        r[3] = d as f64;
        r[4] = avg;
    }

    let spectra = hypergraph_spectra(&Hypergraph::from_instance(inst))?;
    for (v, &lambda) in pairing_order(&graph, Layer::Element, &degree)
        .into_iter()
        .zip(&spectra.vertex.eigenvalues)
    {
        rows[v][5] = lambda;
    }
    for (v, &lambda) in pairing_order(&graph, Layer::Column, &degree)
        .into_iter()
        .zip(&spectra.edge.eigenvalues)
    {
        rows[v][6] = lambda;
    }
    Ok((graph, FeatureMatrix::new(rows)))
}

pub fn assemble_features(inst: &ScpInstance) -> Result<(ScpGraph, FeatureMatrix), GraphError> {
    let (graph, raw) = raw_features(inst)?;
    Ok((graph, raw.normalized()))
}

/// One row per node: `node_id,layer,<schema columns>`.
pub fn features_csv(graph: &ScpGraph, features: &FeatureMatrix) -> String {
    let mut out = String::from("node_id,layer");
    for name in FEATURE_SCHEMA {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (v, row) in features.rows().iter().enumerate() {
        let _ = write!(out, "{v},{}", graph.layer(v).label());
        for x in row {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
    out
}
