//! Tabular data: ingestion, preprocessing, and the experiment data protocol.

mod preprocess;
mod sampling;
mod synth;
mod table;

use ndarray::{Array2, Axis};

use crate::error::{DevNetError, Result};
use crate::Label;

pub use preprocess::{
    preprocess, standardize_fit_apply, ColumnEncoding, Encoder, Standardizer, STD_FLOOR,
};
pub use sampling::{
    adjust_contamination, contamination_target, draw_labeled_anomalies, split_train_test,
};
pub use synth::synth_gaussian;
pub use table::{load_csv, ColumnKind, Table};

/// Fully numeric feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<Label>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(DevNetError::shape(
                "dataset labels",
                features.nrows(),
                labels.len(),
            ));
        }
        if feature_names.len() != features.ncols() {
            return Err(DevNetError::shape(
                "dataset feature names",
                features.ncols(),
                feature_names.len(),
            ));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(DevNetError::DegenerateInput(
                "dataset contains non-finite values",
            ));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_anomaly()).count()
    }

    pub fn anomaly_rate(&self) -> f64 {
        if self.n_rows() == 0 {
            0.0
        } else {
            self.anomaly_count() as f64 / self.n_rows() as f64
        }
    }

    /// Row indices carrying `label`, in order.
    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    /// New dataset made of the given rows (repeats allowed), in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Feature rows carrying `label`.
    pub fn rows_of(&self, label: Label) -> Array2<f64> {
        self.features.select(Axis(0), &self.indices_of(label))
    }
}
