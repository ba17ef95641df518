//! End-to-end experiment pipeline and the standard experiment grids.
//!
//! One run: stratified split, draw the labeled anomalies K from the training
//! anomalies, resample the remaining anomalies so they make up the requested
//! fraction of the unlabeled set U, fit the scaler on U and K, train, and
//! score the untouched test split.

use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{
    adjust_contamination, draw_labeled_anomalies, split_train_test, Dataset, Standardizer,
};
use crate::error::{DevNetError, Result};
use crate::eval::{aggregate_runs, RankingMetrics, RunAggregate};
use crate::model::{Preprocessing, TrainedModel};
use crate::trainer::{train_variant, DevNetConfig, TrainingSet, Variant};
use crate::{seed, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub train_fraction: f64,
    /// Anomaly fraction of the unlabeled training set U.
    pub contamination_rate: f64,
    pub n_labeled_anomalies: usize,
    /// Z-score features with statistics of the training data.
    pub standardize: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            train_fraction: 0.8,
            contamination_rate: 0.02,
            n_labeled_anomalies: 30,
            standardize: true,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(DevNetError::InvalidConfig(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(0.0..=0.5).contains(&self.contamination_rate) {
            return Err(DevNetError::InvalidConfig(format!(
                "contamination_rate must lie in [0, 0.5], got {}",
                self.contamination_rate
            )));
        }
        if self.n_labeled_anomalies == 0 {
            return Err(DevNetError::InvalidConfig(
                "n_labeled_anomalies must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Training data and held-out test split for one seeded run.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Standardized when a scaler was fitted.
    pub training: TrainingSet,
    /// Raw test features; the scaler is applied at prediction time.
    pub test: Dataset,
    pub scaler: Option<Standardizer>,
    /// True anomalies hidden in U (their labels are not used for training).
    pub unlabeled_anomalies: usize,
}

pub fn prepare(ds: &Dataset, spec: &ExperimentSpec, seed: u64) -> Result<Prepared> {
    spec.validate()?;
    let (train, test) = split_train_test(ds, spec.train_fraction, seed::derive(seed, 10))?;
    let (known, rest) = draw_labeled_anomalies(
        train.rows_of(Label::Anomaly).view(),
        spec.n_labeled_anomalies,
        seed::derive(seed, 11),
    )?;

    let normals = train.rows_of(Label::Normal);
    let n_normal = normals.nrows();
    let pool = Dataset::new(
        concatenate(Axis(0), &[normals.view(), rest.view()]).expect("same width"),
        (0..n_normal + rest.nrows())
            .map(|i| Label::from_bool(i >= n_normal))
            .collect(),
        train.feature_names.clone(),
    )?;
    let unlabeled = if spec.contamination_rate == 0.0 || rest.nrows() > 0 {
        adjust_contamination(&pool, spec.contamination_rate, seed::derive(seed, 12))?
    } else {
        // Every training anomaly went into K: nothing left to hide in U.
        return Err(DevNetError::NoAnomalies {
            rate: spec.contamination_rate,
        });
    };
    let unlabeled_anomalies = unlabeled.anomaly_count();

    let (u, k, scaler) = if spec.standardize {
        let all =
            concatenate(Axis(0), &[unlabeled.features.view(), known.view()]).expect("same width");
        let scaler = Standardizer::fit(all.view())?;
        (
            scaler.transform(unlabeled.features.view())?,
            scaler.transform(known.view())?,
            Some(scaler),
        )
    } else {
        (unlabeled.features, known, None)
    };
    Ok(Prepared {
        training: TrainingSet::new(u, k)?,
        test,
        scaler,
        unlabeled_anomalies,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: TrainedModel,
    pub metrics: RankingMetrics,
}

/// One full run; the training seed is `seed` itself so reruns are reproducible.
pub fn run_once(
    ds: &Dataset,
    spec: &ExperimentSpec,
    cfg: &DevNetConfig,
    seed: u64,
) -> Result<RunOutcome> {
    let prepared = prepare(ds, spec, seed)?;
    let mut run_cfg = *cfg;
    run_cfg.train.seed = seed;
    let model = train_variant(&prepared.training, &run_cfg)?.with_preprocessing(Preprocessing {
        encoder: None,
        scaler: prepared.scaler,
    });
    let scores = model.predict_dataset(&prepared.test)?;
    let metrics = RankingMetrics::evaluate(
        scores.as_slice().expect("contiguous"),
        &prepared.test.labels,
    )?;
    Ok(RunOutcome { model, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Effectiveness,
    DataEfficiency,
    Contamination,
    Ablation,
    Scalability,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Effectiveness,
        Protocol::DataEfficiency,
        Protocol::Contamination,
        Protocol::Ablation,
        Protocol::Scalability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Effectiveness => "effectiveness",
            Protocol::DataEfficiency => "data-efficiency",
            Protocol::Contamination => "contamination",
            Protocol::Ablation => "ablation",
            Protocol::Scalability => "scalability",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = DevNetError;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| DevNetError::InvalidConfig(format!("unknown protocol '{s}'")))
    }
}

pub const DATA_EFFICIENCY_GRID: [usize; 5] = [5, 15, 30, 60, 120];
pub const CONTAMINATION_GRID: [f64; 5] = [0.0, 0.02, 0.05, 0.10, 0.20];
pub const SCALABILITY_SIZES: [usize; 4] = [10_000, 20_000, 40_000, 80_000];
pub const SCALABILITY_SIZE_DIM: usize = 1000;
pub const SCALABILITY_DIMS: [usize; 4] = [1000, 2000, 4000, 8000];
pub const SCALABILITY_DIM_SIZE: usize = 5000;

/// One configuration of an experiment, run over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    pub spec: ExperimentSpec,
    pub config: DevNetConfig,
}

/// Arms of a dataset-based protocol. `grid` overrides the default grid
/// (labeled-anomaly counts or contamination rates); it is ignored by the
/// effectiveness and ablation protocols.
pub fn arms(
    protocol: Protocol,
    spec: &ExperimentSpec,
    cfg: &DevNetConfig,
    grid: Option<&[f64]>,
) -> Result<Vec<Arm>> {
    let arm = |name: String, spec: ExperimentSpec, config: DevNetConfig| Arm { name, spec, config };
    Ok(match protocol {
        Protocol::Effectiveness => vec![arm(cfg.train.variant.to_string(), *spec, *cfg)],
        Protocol::DataEfficiency => {
            let counts: Vec<usize> = match grid {
                Some(g) => g
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(DevNetError::InvalidConfig(format!(
                                "labeled-anomaly grid values must be positive integers, got {v}"
                            )))
                        }
                    })
                    .collect::<Result<_>>()?,
                None => DATA_EFFICIENCY_GRID.to_vec(),
            };
            counts
                .into_iter()
                .map(|k| {
                    let s = ExperimentSpec {
                        n_labeled_anomalies: k,
                        ..*spec
                    };
                    arm(format!("k={k}"), s, *cfg)
                })
                .collect()
        }
        Protocol::Contamination => grid
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| CONTAMINATION_GRID.to_vec())
            .into_iter()
            .map(|rate| {
                let s = ExperimentSpec {
                    contamination_rate: rate,
                    ..*spec
                };
                arm(format!("contamination={rate}"), s, *cfg)
            })
            .collect(),
        Protocol::Ablation => Variant::ALL
            .into_iter()
            .map(|v| {
                let mut c = *cfg;
                c.train.variant = v;
                arm(v.to_string(), *spec, c)
            })
            .collect(),
        Protocol::Scalability => {
            return Err(DevNetError::InvalidConfig(
                "the scalability protocol runs on generated data, not arms".into(),
            ))
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub arm: Arm,
    pub aggregate: RunAggregate,
}

/// Runs an arm over seeds `base_seed..base_seed + n_runs`.
pub fn run_arm(ds: &Dataset, arm: &Arm, n_runs: usize, base_seed: u64) -> Result<ArmResult> {
    arm.spec.validate()?;
    arm.config.validate()?;
    let aggregate = aggregate_runs(
        |s| run_once(ds, &arm.spec, &arm.config, s).map(|o| o.metrics),
        n_runs,
        base_seed,
    )?;
    Ok(ArmResult {
        arm: arm.clone(),
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_gaussian;
    use crate::trainer::TrainConfig;

    fn quick_cfg() -> DevNetConfig {
        DevNetConfig {
            train: TrainConfig {
                n_epochs: 2,
                n_batches: 5,
                batch_size: 32,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn prepare_shapes() {
        let ds = synth_gaussian(1000, 100, 3, 3.0, 0).unwrap();
        let p = prepare(&ds, &ExperimentSpec::default(), 1).unwrap();
        assert_eq!(p.test.n_rows(), 200 + 20);
        assert_eq!(p.training.labeled_anomalies().nrows(), 30);
        // 800 normals plus round(0.02 * 800 / 0.98) = 16 anomalies
        assert_eq!(p.training.unlabeled().nrows(), 816);
        assert_eq!(p.unlabeled_anomalies, 16);
        assert!(p.scaler.is_some());
    }

    #[test]
    fn budget_larger_than_pool() {
        let ds = synth_gaussian(1000, 20, 3, 3.0, 0).unwrap();
        let err = prepare(&ds, &ExperimentSpec::default(), 1).unwrap_err();
        assert!(matches!(
            err,
            DevNetError::BudgetTooLarge {
                requested: 30,
                available: 16
            }
        ));
    }

    #[test]
    fn all_anomalies_labeled_needs_zero_contamination() {
        let ds = synth_gaussian(100, 10, 2, 3.0, 0).unwrap();
        let spec = ExperimentSpec {
            n_labeled_anomalies: 8,
            ..Default::default()
        };
        assert!(matches!(
            prepare(&ds, &spec, 0),
            Err(DevNetError::NoAnomalies { .. })
        ));
        let clean = ExperimentSpec {
            contamination_rate: 0.0,
            ..spec
        };
        let p = prepare(&ds, &clean, 0).unwrap();
        assert_eq!(p.unlabeled_anomalies, 0);
    }

    #[test]
    fn arm_grids() {
        let spec = ExperimentSpec::default();
        let cfg = DevNetConfig::default();
        let a = arms(Protocol::DataEfficiency, &spec, &cfg, None).unwrap();
        let ks: Vec<usize> = a.iter().map(|a| a.spec.n_labeled_anomalies).collect();
        assert_eq!(ks, vec![5, 15, 30, 60, 120]);
        let c = arms(Protocol::Contamination, &spec, &cfg, None).unwrap();
        assert_eq!(c.len(), 5);
        assert_eq!(c[4].spec.contamination_rate, 0.2);
        let ab = arms(Protocol::Ablation, &spec, &cfg, None).unwrap();
        let vs: Vec<Variant> = ab.iter().map(|a| a.config.train.variant).collect();
        assert_eq!(vs, Variant::ALL.to_vec());
        assert!(arms(Protocol::DataEfficiency, &spec, &cfg, Some(&[2.5])).is_err());
        assert!(arms(Protocol::Scalability, &spec, &cfg, None).is_err());
        assert_eq!(
            "data-efficiency".parse::<Protocol>().unwrap(),
            Protocol::DataEfficiency
        );
    }

    #[test]
    fn run_arm_is_reproducible() {
        let ds = synth_gaussian(300, 60, 4, 3.0, 5).unwrap();
        let arm = Arm {
            name: "def".into(),
            spec: ExperimentSpec::default(),
            config: quick_cfg(),
        };
        let a = run_arm(&ds, &arm, 2, 9).unwrap();
        let b = run_arm(&ds, &arm, 2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.aggregate.seeds, vec![9, 10]);
        assert!(a.aggregate.mean.auc_roc > 0.9);
    }
}
