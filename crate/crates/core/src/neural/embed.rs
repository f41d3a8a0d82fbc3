use serde::Serialize;

use super::model::{forward, GnnModel, Mode};
use super::tensor::{Matrix, Scalar};
use super::NeuralError;
use crate::graphrep::{FeatureMatrix, ScpGraph};

/// Penultimate-layer activations for every node, in eval mode.
pub fn extract_embeddings<T: Scalar>(
    model: &GnnModel<T>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
) -> Result<Matrix<T>, NeuralError> {
    let mut m = model.clone();
    m.set_mode(Mode::Eval);
    let (_, cache) = forward(&m, graph, features, None)?;
    Ok(cache.embeddings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Separation {
    /// Mean distance between distinct solution nodes.
    pub intra: f64,
    /// Mean distance from solution nodes to non-solution nodes.
    pub inter: f64,
    /// Set when either mean is undefined (fewer than two solution nodes or
    /// no non-solution node); the undefined mean is reported as 0.
    pub degenerate: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `points[k]` is the embedding of Column node `k`; `labels[k]` marks the
/// solution columns.
pub fn separation_metrics(points: &[Vec<f64>], labels: &[bool]) -> Separation {
    let sol: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l).map(|(p, _)| p).collect();
    let rest: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| !l).map(|(p, _)| p).collect();
    let mut intra = 0.0;
    if sol.len() >= 2 {
        let mut total = 0.0;
        for (i, a) in sol.iter().enumerate() {
            for (j, b) in sol.iter().enumerate() {
                if i != j {
                    total += distance(a, b);
                }
            }
        }
        intra = total / (sol.len() * (sol.len() - 1)) as f64;
    }
    let mut inter = 0.0;
    if !sol.is_empty() && !rest.is_empty() {
        let total: f64 = sol.iter().flat_map(|a| rest.iter().map(move |b| distance(a, b))).sum();
        inter = total / (sol.len() * rest.len()) as f64;
    }
    Separation {
        intra,
        inter,
        degenerate: sol.len() < 2 || rest.is_empty(),
    }
}
