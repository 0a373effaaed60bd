//! Training loop, price-space evaluation and the experiment grids.

mod experiments;
mod metrics;
mod optim;
mod trainer;

use thiserror::Error;

pub use experiments::{
    improvements_csv, median, results_csv, run_ablation, run_comparative, run_experiment, run_single, save_run,
    ComparativeReport, ExperimentConfig, Improvement, MetricsReport, RunOutput, ABLATION_ORDER, RESULTS_HEADER,
};
pub use metrics::{mape, median_abs_error, MetricError};
pub use optim::{Optimizer, OptimizerKind};
pub use trainer::{
    batch_tensors, dataset_loss, evaluate, evaluate_predictions, persistence_baseline, predict_scaled, train,
    EpochRecord, Evaluation, TrainConfig, TrainOutcome,
};

use crate::dam::ModelError;
use crate::datapipe::DataError;
use crate::ndcore::NdError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Numeric(#[from] NdError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Divergence { epoch: usize, batch: usize, detail: String },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{} of {} runs failed: {}", failures.len(), failures.len() + completed.len(), failures.join("; "))]
    Partial {
        completed: Vec<MetricsReport>,
        failures: Vec<String>,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, TrainError>;
