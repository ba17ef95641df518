//! Trained models and their JSON file format.
//!
//! The document carries a format version, the architecture, every tensor
//! with its explicit shape (row-major), the full training configuration
//! (including the prior), the fitted preprocessing and the training log.
//! Floats are written in shortest round-trip form, so save/load is exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Encoder, Standardizer, Table};
use crate::error::{DevNetError, Result};
use crate::network::{Architecture, Parameters};
use crate::trainer::{representation_score, DevNetConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

/// Transformations applied to raw inputs before scoring.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Raw-table encoding (imputation and one-hot), when trained from a CSV.
    pub encoder: Option<Encoder>,
    /// Feature standardization fitted on the training split.
    pub scaler: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub parameters: Parameters,
    pub config: DevNetConfig,
    pub preprocessing: Preprocessing,
    pub training_log: Vec<EpochLoss>,
}

impl TrainedModel {
    pub fn new(
        parameters: Parameters,
        config: DevNetConfig,
        preprocessing: Preprocessing,
        training_log: Vec<EpochLoss>,
    ) -> Self {
        TrainedModel {
            format_version: FORMAT_VERSION,
            parameters,
            config,
            preprocessing,
            training_log,
        }
    }

    pub fn architecture(&self) -> &Architecture {
        self.parameters.architecture()
    }

    pub fn with_preprocessing(mut self, preprocessing: Preprocessing) -> Self {
        self.preprocessing = preprocessing;
        self
    }

    /// Anomaly scores for encoded feature rows; higher means more anomalous.
    ///
    /// The fitted scaler, if any, is applied first. Representation-mode models
    /// score a row by the mean Z-score of its representation under the prior.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let scaled;
        let input = match &self.preprocessing.scaler {
            Some(scaler) => {
                scaled = scaler.transform(x)?;
                scaled.view()
            }
            None => x,
        };
        if self.architecture().rep_mode {
            let out = self.parameters.outputs(input)?;
            Ok(representation_score(&out, &self.config.prior))
        } else {
            self.parameters.scores(input)
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Array1<f64>> {
        self.predict(ds.features.view())
    }

    /// Encodes a raw table with the stored encoder, then scores it.
    pub fn predict_table(&self, table: &Table) -> Result<Array1<f64>> {
        let encoder = self.preprocessing.encoder.as_ref().ok_or_else(|| {
            DevNetError::SchemaMismatch("model was not trained from a raw table".into())
        })?;
        let features = encoder.transform_features(table)?;
        self.predict(features.view())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format_version != FORMAT_VERSION {
            return Err(DevNetError::SchemaMismatch(format!(
                "model format version {} is not supported (expected {FORMAT_VERSION})",
                model.format_version
            )));
        }
        model.parameters.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|source| DevNetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| DevNetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
