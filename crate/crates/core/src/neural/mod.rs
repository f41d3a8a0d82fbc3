//! A small GraphSAGE stack written against plain `Vec` storage: tensors,
//! forward and backward passes, the hybrid loss, Adam, a finite-difference
//! gradient check and JSON model files.

mod embed;
mod io;
mod loss;
mod model;
mod optim;
mod tensor;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{extract_embeddings, separation_metrics, Separation};
pub use io::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};
pub use loss::{bce, loss, penalty, BceReduction, LossConfig, PenaltyForm, BCE_CLIP};
pub use model::{
    backward, features_to_matrix, forward, init_model, mean_aggregate, Aggregate, ForwardCache, GnnModel, Mode,
    ModelConfig, Params, RunningStats, SageParams, BN_EPS, BN_MOMENTUM, SCORE_CLIP,
};
pub use optim::{OptimizerState, DEFAULT_LEARNING_RATE};
pub use tensor::{Matrix, Scalar};
pub use train::{
    analytic_gradient, grad_check, max_relative_error, numeric_gradient, train_step, GRAD_CHECK_STEP,
};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model expects features {model:?}, extractor produces {features:?}")]
    SchemaMismatch {
        model: Vec<String>,
        features: Vec<String>,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{scores} scores and {labels} labels for {columns} columns")]
    LengthMismatch {
        scores: usize,
        labels: usize,
        columns: usize,
    },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("model format {found:?} is not {expected:?}")]
    VersionMismatch { found: String, expected: &'static str },
    #[error("malformed model file: {0}")]
    MalformedFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a saved model was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingFingerprint {
    pub seed: u64,
    pub epochs: usize,
    pub loss_config: LossConfig,
}
