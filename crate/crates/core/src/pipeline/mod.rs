//! Orchestration: labeled datasets, the training loop, the threshold
//! decrement solve, metrics and the experiment suites.

mod dataset;
mod experiment;
mod metrics;
mod solve;
mod train;

pub use dataset::{derive_seed, label_instance, make_dataset, LabeledExample};
pub use experiment::{
    run_experiment, BenchInstance, BenchRow, BenchStop, ExperimentKind, ExperimentParams, IncumbentRow,
};
pub use metrics::{auc, compute_metrics, Metrics, MIN_TIMING_MS};
pub use solve::{
    column_scores, nearest_rank_cutoff, select_columns, solve_pipeline, solve_with_scores, PipelineOptions,
    PipelineReport, RoundTrace, StopMode,
};
pub use train::{split_indices, train, EpochRecord, TrainConfig, TrainingHistory};

use thiserror::Error;

use crate::graphrep::GraphError;
use crate::instance::InstanceError;
use crate::neural::NeuralError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("exact solve of {0} did not reach optimality")]
    NotOptimal(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
