//! GraphSAGE column scorer.
//!
//! Each SAGE layer concatenates a node's state with the mean of its
//! neighbors' states (undirected view), applies a linear map, batch norm
//! over the graph's nodes, ReLU and inverted dropout. A fully connected
//! ReLU layer and a sigmoid head follow; only Column nodes are scored.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{lit, Matrix, Scalar};
use super::NeuralError;
use crate::graphrep::{FeatureMatrix, ScpGraph, FEATURE_COUNT, FEATURE_SCHEMA};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-8;
/// Scores are kept this far from 0 and 1.
pub const SCORE_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregate {
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub sage_layers: usize,
    pub dropout_rate: f64,
    pub seed: u64,
    pub aggregate: Aggregate,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            in_dim: FEATURE_COUNT,
            hidden_dim: 128,
            sage_layers: 2,
            dropout_rate: 0.4,
            seed: 0,
            aggregate: Aggregate::Mean,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.in_dim == 0 || self.hidden_dim == 0 || self.sage_layers == 0 {
            return Err(NeuralError::InvalidConfig(format!(
                "dimensions must be positive (in {}, hidden {}, layers {})",
                self.in_dim, self.hidden_dim, self.sage_layers
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NeuralError::InvalidConfig(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SageParams<T> {
    /// `(2 * in, out)`: rows for the node's own state, then the aggregate.
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub bn_scale: Vec<T>,
    pub bn_shift: Vec<T>,
}

/// Every trainable tensor. Gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub sage: Vec<SageParams<T>>,
    pub fc_weight: Matrix<T>,
    pub fc_bias: Vec<T>,
    pub out_weight: Vec<T>,
    pub out_bias: Vec<T>,
}

impl<T: Scalar> Params<T> {
    pub fn slices(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = Vec::new();
        for s in &self.sage {
            v.extend([s.weight.as_slice(), &s.bias, &s.bn_scale, &s.bn_shift]);
        }
        v.extend([self.fc_weight.as_slice(), &self.fc_bias, &self.out_weight, &self.out_bias]);
        v
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = Vec::new();
        for s in &mut self.sage {
            v.push(s.weight.as_mut_slice());
            v.push(&mut s.bias);
            v.push(&mut s.bn_scale);
            v.push(&mut s.bn_shift);
        }
        v.push(self.fc_weight.as_mut_slice());
        v.push(&mut self.fc_bias);
        v.push(&mut self.out_weight);
        v.push(&mut self.out_bias);
        v
    }

    pub fn count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.iter_mut().for_each(|x| *x = T::zero());
        }
        z
    }

    pub fn cast<U: Scalar>(&self) -> Params<U> {
        let v = |x: &[T]| x.iter().map(|&a| U::from(a).expect("castable")).collect::<Vec<U>>();
        Params {
            sage: self
                .sage
                .iter()
                .map(|s| SageParams {
                    weight: s.weight.cast(),
                    bias: v(&s.bias),
                    bn_scale: v(&s.bn_scale),
                    bn_shift: v(&s.bn_shift),
                })
                .collect(),
            fc_weight: self.fc_weight.cast(),
            fc_bias: v(&self.fc_bias),
            out_weight: v(&self.out_weight),
            out_bias: v(&self.out_bias),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel<T> {
    pub config: ModelConfig,
    pub feature_schema: Vec<String>,
    pub params: Params<T>,
    pub running: Vec<RunningStats<T>>,
    pub mode: Mode,
    pub fingerprint: Option<super::TrainingFingerprint>,
}

fn glorot<T: Scalar>(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Matrix<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| lit(rng.random_range(-limit..limit)))
        .collect();
    Matrix::from_vec(fan_in, fan_out, data)
}

pub fn init_model<T: Scalar>(config: &ModelConfig) -> Result<GnnModel<T>, NeuralError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let h = config.hidden_dim;
    let mut sage = Vec::with_capacity(config.sage_layers);
    let mut running = Vec::with_capacity(config.sage_layers);
    let mut width = config.in_dim;
    for _ in 0..config.sage_layers {
        sage.push(SageParams {
            weight: glorot(&mut rng, 2 * width, h),
            bias: vec![T::zero(); h],
            bn_scale: vec![T::one(); h],
            bn_shift: vec![T::zero(); h],
        });
        running.push(RunningStats {
            mean: vec![T::zero(); h],
            var: vec![T::one(); h],
        });
        width = h;
    }
    let fc_weight = glorot(&mut rng, h, h);
    let out_weight = glorot::<T>(&mut rng, h, 1).as_slice().to_vec();
    Ok(GnnModel {
        config: config.clone(),
        feature_schema: FEATURE_SCHEMA.iter().map(|s| s.to_string()).collect(),
        params: Params {
            sage,
            fc_weight,
            fc_bias: vec![T::zero(); h],
            out_weight,
            out_bias: vec![T::zero()],
        },
        running,
        mode: Mode::Train,
        fingerprint: None,
    })
}

impl<T: Scalar> GnnModel<T> {
    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn cast<U: Scalar>(&self) -> GnnModel<U> {
        let v = |x: &[T]| x.iter().map(|&a| U::from(a).expect("castable")).collect::<Vec<U>>();
        GnnModel {
            config: self.config.clone(),
            feature_schema: self.feature_schema.clone(),
            params: self.params.cast(),
            running: self
                .running
                .iter()
                .map(|r| RunningStats {
                    mean: v(&r.mean),
                    var: v(&r.var),
                })
                .collect(),
            mode: self.mode,
            fingerprint: self.fingerprint.clone(),
        }
    }

    fn check_schema(&self, features: &FeatureMatrix, graph: &ScpGraph) -> Result<(), NeuralError> {
        let expected: Vec<String> = FEATURE_SCHEMA.iter().map(|s| s.to_string()).collect();
        if self.feature_schema != expected || self.config.in_dim != FEATURE_COUNT {
            return Err(NeuralError::SchemaMismatch {
                model: self.feature_schema.clone(),
                features: expected,
            });
        }
        if features.node_count() != graph.node_count() {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} feature rows for {} nodes",
                features.node_count(),
                graph.node_count()
            )));
        }
        Ok(())
    }
}

/// Mean of neighbor rows; zero for isolated nodes.
pub fn mean_aggregate<T: Scalar>(graph: &ScpGraph, h: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(h.rows(), h.cols());
    for v in 0..graph.node_count() {
        let nb = graph.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let scale = T::one() / lit(nb.len() as f64);
        let row = out.row_mut(v);
        for &u in nb {
            for (x, &y) in row.iter_mut().zip(h.row(u)) {
                *x += y;
            }
        }
        row.iter_mut().for_each(|x| *x *= scale);
    }
    out
}

/// Transpose of `mean_aggregate`: spreads each node's gradient back over
/// its neighbors.
fn mean_aggregate_backward<T: Scalar>(graph: &ScpGraph, d_agg: &Matrix<T>, into: &mut Matrix<T>) {
    for v in 0..graph.node_count() {
        let nb = graph.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        let scale = T::one() / lit(nb.len() as f64);
        for &u in nb {
            for (x, &g) in into.row_mut(u).iter_mut().zip(d_agg.row(v)) {
                *x += g * scale;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SageCache<T> {
    concat: Matrix<T>,
    xhat: Matrix<T>,
    inv_std: Vec<T>,
    batch_mean: Vec<T>,
    batch_var: Vec<T>,
    /// BN output before ReLU.
    pre_relu: Matrix<T>,
    /// Dropout multipliers (0 or `1/(1-p)`), absent when no dropout ran.
    mask: Option<Vec<T>>,
    batch_stats: bool,
}

/// Activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub(crate) sage: Vec<SageCache<T>>,
    pub(crate) fc_input: Matrix<T>,
    /// Penultimate activations (after the FC ReLU), one row per node.
    pub embeddings: Matrix<T>,
    /// Sigmoid output for every node, clipped.
    pub(crate) all_scores: Vec<T>,
    pub(crate) clipped: Vec<bool>,
    pub column_nodes: Vec<usize>,
}

pub fn features_to_matrix<T: Scalar>(features: &FeatureMatrix) -> Matrix<T> {
    let data = features.rows().iter().flatten().map(|&x| lit(x)).collect();
    Matrix::from_vec(features.node_count(), FEATURE_COUNT, data)
}

/// Runs the network in `model.mode`. In train mode batch statistics are
/// used (running statistics are not touched here) and dropout draws from
/// `rng` when one is given. Returns scores for Column nodes in column order.
pub fn forward<T: Scalar>(
    model: &GnnModel<T>,
    graph: &ScpGraph,
    features: &FeatureMatrix,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Vec<T>, ForwardCache<T>), NeuralError> {
    model.check_schema(features, graph)?;
    let x = features_to_matrix::<T>(features);
    Ok(forward_matrix(model, graph, x, rng))
}

pub(crate) fn forward_matrix<T: Scalar>(
    model: &GnnModel<T>,
    graph: &ScpGraph,
    x: Matrix<T>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> (Vec<T>, ForwardCache<T>) {
    let train = model.mode == Mode::Train;
    let n_nodes = x.rows();
    let count = lit::<T>(n_nodes as f64);
    let eps = lit::<T>(BN_EPS);
    let p = model.config.dropout_rate;
    let keep_scale = lit::<T>(1.0 / (1.0 - p));
    let mut h = x;
    let mut caches = Vec::with_capacity(model.params.sage.len());
    for (layer, running) in model.params.sage.iter().zip(&model.running) {
        let agg = mean_aggregate(graph, &h);
        let concat = Matrix::hconcat(&h, &agg);
        let mut z = concat.matmul(&layer.weight);
        z.add_row_vector(&layer.bias);
        let width = z.cols();
        let batch_stats = train && n_nodes > 0;
        let (mean, var) = if batch_stats {
            let mean: Vec<T> = z.column_sums().into_iter().map(|s| s / count).collect();
            let mut var = vec![T::zero(); width];
            for r in 0..n_nodes {
                for ((acc, &zv), &mv) in var.iter_mut().zip(z.row(r)).zip(&mean) {
                    let d = zv - mv;
                    *acc += d * d;
                }
            }
            var.iter_mut().for_each(|v| *v = *v / count);
            (mean, var)
        } else {
            (running.mean.clone(), running.var.clone())
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut xhat = z;
        let mut pre_relu = Matrix::zeros(n_nodes, width);
        for r in 0..n_nodes {
            let xr = xhat.row_mut(r);
            for c in 0..width {
                xr[c] = (xr[c] - mean[c]) * inv_std[c];
            }
            let pr = pre_relu.row_mut(r);
            for c in 0..width {
                pr[c] = layer.bn_scale[c] * xhat.get(r, c) + layer.bn_shift[c];
            }
        }
        let mut out = pre_relu.clone();
        out.as_mut_slice().iter_mut().for_each(|v| *v = v.max(T::zero()));
        let mask = match rng.as_deref_mut() {
            Some(rng) if train && p > 0.0 => {
                let m: Vec<T> = (0..n_nodes * width)
                    .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep_scale })
                    .collect();
                for (v, &k) in out.as_mut_slice().iter_mut().zip(&m) {
                    *v *= k;
                }
                Some(m)
            }
            _ => None,
        };
        caches.push(SageCache {
            concat,
            xhat,
            inv_std,
            batch_mean: mean,
            batch_var: var,
            pre_relu,
            mask,
            batch_stats,
        });
        h = out;
    }

    let mut f = h.matmul(&model.params.fc_weight);
    f.add_row_vector(&model.params.fc_bias);
    f.as_mut_slice().iter_mut().for_each(|v| *v = v.max(T::zero()));

    let lo = lit::<T>(SCORE_CLIP);
    let hi = T::one() - lo;
    let mut all_scores = Vec::with_capacity(n_nodes);
    let mut clipped = Vec::with_capacity(n_nodes);
    for r in 0..n_nodes {
        let logit = super::tensor::dot(f.row(r), &model.params.out_weight) + model.params.out_bias[0];
        let s = T::one() / (T::one() + (-logit).exp());
        clipped.push(!(s > lo && s < hi));
        all_scores.push(s.max(lo).min(hi));
    }
    let column_nodes = graph.column_nodes();
    let scores = column_nodes.iter().map(|&v| all_scores[v]).collect();
    (
        scores,
        ForwardCache {
            sage: caches,
            fc_input: h,
            embeddings: f,
            all_scores,
            clipped,
            column_nodes,
        },
    )
}

/// Gradients of every parameter given `d_scores`, the loss gradient with
/// respect to the Column-node scores.
pub fn backward<T: Scalar>(model: &GnnModel<T>, graph: &ScpGraph, cache: &ForwardCache<T>, d_scores: &[T]) -> Params<T> {
    let n_nodes = cache.all_scores.len();
    let h = model.config.hidden_dim;
    let mut grads = model.params.zeros_like();

    // sigmoid head
    let mut d_logit = vec![T::zero(); n_nodes];
    for (&v, &g) in cache.column_nodes.iter().zip(d_scores) {
        if !cache.clipped[v] {
            let s = cache.all_scores[v];
            d_logit[v] = g * s * (T::one() - s);
        }
    }
    let f = &cache.embeddings;
    let mut d_f = Matrix::zeros(n_nodes, h);
    for r in 0..n_nodes {
        let g = d_logit[r];
        if g == T::zero() {
            continue;
        }
        grads.out_bias[0] += g;
        for (acc, &x) in grads.out_weight.iter_mut().zip(f.row(r)) {
            *acc += g * x;
        }
        for ((d, &w), &x) in d_f.row_mut(r).iter_mut().zip(&model.params.out_weight).zip(f.row(r)) {
            if x > T::zero() {
                *d = g * w;
            }
        }
    }

    // fully connected layer (d_f already masked by its ReLU)
    grads.fc_weight = cache.fc_input.t_matmul(&d_f);
    grads.fc_bias = d_f.column_sums();
    let mut d_h = d_f.matmul_t(&model.params.fc_weight);

    for (k, (layer, c)) in model.params.sage.iter().zip(&cache.sage).enumerate().rev() {
        let width = layer.bias.len();
        if let Some(mask) = &c.mask {
            for (d, &m) in d_h.as_mut_slice().iter_mut().zip(mask) {
                *d *= m;
            }
        }
        for (d, &pre) in d_h.as_mut_slice().iter_mut().zip(c.pre_relu.as_slice()) {
            if pre <= T::zero() {
                *d = T::zero();
            }
        }
        let d_y = d_h;
        let g = &mut grads.sage[k];
        let mut sum_dxhat = vec![T::zero(); width];
        let mut sum_dxhat_xhat = vec![T::zero(); width];
        let mut d_xhat = Matrix::zeros(n_nodes, width);
        for r in 0..n_nodes {
            for col in 0..width {
                let dy = d_y.get(r, col);
                let xh = c.xhat.get(r, col);
                g.bn_shift[col] += dy;
                g.bn_scale[col] += dy * xh;
                let dx = dy * layer.bn_scale[col];
                d_xhat.set(r, col, dx);
                sum_dxhat[col] += dx;
                sum_dxhat_xhat[col] += dx * xh;
            }
        }
        let mut d_z = d_xhat;
        if c.batch_stats {
            let count = lit::<T>(n_nodes as f64);
            for r in 0..n_nodes {
                for col in 0..width {
                    let v = d_z.get(r, col);
                    let xh = c.xhat.get(r, col);
                    let adj = (count * v - sum_dxhat[col] - xh * sum_dxhat_xhat[col]) * c.inv_std[col] / count;
                    d_z.set(r, col, adj);
                }
            }
        } else {
            for r in 0..n_nodes {
                for col in 0..width {
                    let v = d_z.get(r, col);
                    d_z.set(r, col, v * c.inv_std[col]);
                }
            }
        }
        g.weight = c.concat.t_matmul(&d_z);
        g.bias = d_z.column_sums();
        if k == 0 {
            break;
        }
        let d_concat = d_z.matmul_t(&layer.weight);
        let in_width = layer.weight.rows() / 2;
        let (d_self, d_agg) = d_concat.hsplit(in_width);
        let mut d_prev = d_self;
        mean_aggregate_backward(graph, &d_agg, &mut d_prev);
        d_h = d_prev;
    }
    grads
}

/// Folds the batch statistics of a train-mode pass into the running ones.
pub(crate) fn update_running_stats<T: Scalar>(model: &mut GnnModel<T>, cache: &ForwardCache<T>) {
    let mom = lit::<T>(BN_MOMENTUM);
    let keep = T::one() - mom;
    for (run, c) in model.running.iter_mut().zip(&cache.sage) {
        if !c.batch_stats {
            continue;
        }
        let n = c.xhat.rows() as f64;
        let unbias = lit::<T>(if n > 1.0 { n / (n - 1.0) } else { 1.0 });
        for (r, &b) in run.mean.iter_mut().zip(&c.batch_mean) {
            *r = keep * *r + mom * b;
        }
        for (r, &b) in run.var.iter_mut().zip(&c.batch_var) {
            *r = keep * *r + mom * b * unbias;
        }
    }
}
