//! Deviation networks for semi-supervised anomaly detection.
//!
//! A small ReLU network maps each object straight to a scalar anomaly score.
//! Training uses a handful of labeled anomalies plus unlabeled data (treated as
//! normal) and a Z-score deviation loss against reference scores drawn from a
//! Gaussian prior, so the learned scores are directly interpretable as tail
//! probabilities under that prior.
//!
//! Module map:
//!
//! - [`network`]: the scoring network, forward pass and backpropagation.
//! - [`deviation`]: Gaussian reference scores and the deviation loss.
//! - [`optimizer`]: RMSprop with L2 weight decay on hidden kernels.
//! - [`trainer`]: stratified mini-batches, the training loop, prediction.
//! - [`data`]: CSV ingestion, preprocessing, the split/contamination/labeling protocol.
//! - [`eval`]: AUC-ROC, average precision, Wilcoxon test, run aggregation, timing.
//! - [`interpret`]: scores to Gaussian tail probabilities and back.
//! - [`protocol`]: end-to-end experiment runs shared by the CLI and the test suites.

pub mod data;
pub mod deviation;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod model;
pub mod network;
pub mod optimizer;
pub mod protocol;
pub mod seed;
pub mod trainer;

use serde::{Deserialize, Serialize};

pub use deviation::{LossConfig, PriorConfig, ReferenceStats};
pub use error::{DevNetError, ErrorKind, Result};
pub use eval::{RankingMetrics, RunAggregate};
pub use model::TrainedModel;
pub use network::{Architecture, Gradients, Parameters};
pub use optimizer::{OptimizerConfig, RmsState};
pub use trainer::{DevNetConfig, TrainConfig, TrainingSet, Variant};

/// Ground-truth class of one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    /// The loss target `y`: 1 for anomalies, 0 otherwise.
    pub fn y(self) -> f64 {
        match self {
            Label::Normal => 0.0,
            Label::Anomaly => 1.0,
        }
    }

    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }

    pub fn from_bool(anomaly: bool) -> Self {
        if anomaly {
            Label::Anomaly
        } else {
            Label::Normal
        }
    }
}
