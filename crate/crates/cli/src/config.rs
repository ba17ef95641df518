use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use devnet::data::ColumnKind;
use devnet::protocol::{
    ExperimentSpec, SCALABILITY_DIMS, SCALABILITY_DIM_SIZE, SCALABILITY_SIZES, SCALABILITY_SIZE_DIM,
};
use devnet::{DevNetConfig, LossConfig, OptimizerConfig, PriorConfig, TrainConfig};
use serde::{Deserialize, Serialize};

/// A problem with the configuration file or flags (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file; relative paths resolve against the config file's directory.
    pub path: Option<PathBuf>,
    pub label_column: String,
    pub positive_token: String,
    /// Per-column kind overrides, e.g. `zip = "categorical"`.
    pub column_kinds: BTreeMap<String, ColumnKind>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            label_column: "label".into(),
            positive_token: "1".into(),
            column_kinds: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub runs: usize,
    /// Labeled-anomaly counts (data-efficiency) or contamination rates.
    pub grid: Option<Vec<f64>>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            runs: devnet::eval::DEFAULT_RUNS,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalabilityConfig {
    pub sizes: Vec<usize>,
    pub size_dim: usize,
    pub dims: Vec<usize>,
    pub dim_size: usize,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        ScalabilityConfig {
            sizes: SCALABILITY_SIZES.to_vec(),
            size_dim: SCALABILITY_SIZE_DIM,
            dims: SCALABILITY_DIMS.to_vec(),
            dim_size: SCALABILITY_DIM_SIZE,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub experiment: ExperimentSpec,
    pub train: TrainConfig,
    pub prior: PriorConfig,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    pub protocol: ProtocolConfig,
    pub scalability: ScalabilityConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Config = toml::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?;
        if let Some(p) = &cfg.data.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.data.path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn model(&self) -> DevNetConfig {
        DevNetConfig {
            train: self.train,
            prior: self.prior,
            loss: self.loss,
            optimizer: self.optimizer,
        }
    }

    pub fn data_path(&self) -> Result<&Path, ConfigError> {
        self.data
            .path
            .as_deref()
            .ok_or_else(|| ConfigError("config has no [data] path".into()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |r: devnet::Result<()>| r.map_err(|e| ConfigError(e.to_string()));
        check(self.model().validate())?;
        check(self.experiment.validate())?;
        if self.protocol.runs == 0 {
            return Err(ConfigError("protocol.runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg: Config = toml::from_str("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.train.n_epochs, 50);
        assert_eq!(cfg.experiment.n_labeled_anomalies, 30);
        assert_eq!(cfg.protocol.runs, 10);
    }

    #[test]
    fn sections_parse() {
        let cfg: Config = toml::from_str(
            r#"
            [data]
            path = "x.csv"
            label_column = "class"
            column_kinds = { zip = "categorical" }
            [train]
            variant = "3hl"
            seed = 4
            [experiment]
            contamination_rate = 0.1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.train.variant, devnet::Variant::ThreeHidden);
        assert_eq!(cfg.data.column_kinds["zip"], ColumnKind::Categorical);
        assert_eq!(cfg.experiment.contamination_rate, 0.1);
        assert_eq!(cfg.experiment.train_fraction, 0.8);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Config>("[train]\nepochs = 3\n").is_err());
    }
}
