//! Ranking metrics, significance testing, repeated-run aggregation and timing.

mod metrics;
mod scalability;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::Label;

pub use metrics::{auc_roc, average_precision};
pub use scalability::{
    dimension_sweep, scalability_sweep, size_sweep, write_timing_csv, SweepPoint, TimingRow,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};

/// Default number of repeated runs per experiment arm.
pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub auc_roc: f64,
    pub auc_pr: f64,
}

impl RankingMetrics {
    /// AUC-ROC and average precision of one scored test set.
    pub fn evaluate(scores: &[f64], labels: &[Label]) -> Result<Self> {
        Ok(RankingMetrics {
            auc_roc: auc_roc(scores, labels)?,
            auc_pr: average_precision(scores, labels)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub seeds: Vec<u64>,
    pub runs: Vec<RankingMetrics>,
    pub mean: RankingMetrics,
    /// Sample standard deviation (n - 1); zero for a single run.
    pub std: RankingMetrics,
}

impl RunAggregate {
    pub fn from_runs(seeds: Vec<u64>, runs: Vec<RankingMetrics>) -> Result<Self> {
        if runs.is_empty() || seeds.len() != runs.len() {
            return Err(DevNetError::InvalidConfig(
                "aggregation needs one seed per run and at least one run".into(),
            ));
        }
        let roc: Vec<f64> = runs.iter().map(|m| m.auc_roc).collect();
        let pr: Vec<f64> = runs.iter().map(|m| m.auc_pr).collect();
        Ok(RunAggregate {
            seeds,
            mean: RankingMetrics {
                auc_roc: mean(&roc),
                auc_pr: mean(&pr),
            },
            std: RankingMetrics {
                auc_roc: sample_std(&roc),
                auc_pr: sample_std(&pr),
            },
            runs,
        })
    }
}

/// Runs `run_fn` with seeds `base_seed..base_seed + n_runs` and summarizes.
///
/// Stops at the first failing run, reporting its seed.
pub fn aggregate_runs<F>(mut run_fn: F, n_runs: usize, base_seed: u64) -> Result<RunAggregate>
where
    F: FnMut(u64) -> Result<RankingMetrics>,
{
    if n_runs == 0 {
        return Err(DevNetError::InvalidConfig(
            "n_runs must be at least 1".into(),
        ));
    }
    let seeds: Vec<u64> = (0..n_runs as u64).map(|i| base_seed + i).collect();
    let mut runs = Vec::with_capacity(n_runs);
    for &seed in &seeds {
        let m = run_fn(seed).map_err(|e| DevNetError::RunFailed {
            seed,
            source: Box::new(e),
        })?;
        runs.push(m);
    }
    RunAggregate::from_runs(seeds, runs)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_zero_std() {
        let agg = aggregate_runs(
            |_| {
                Ok(RankingMetrics {
                    auc_roc: 0.8,
                    auc_pr: 0.3,
                })
            },
            1,
            7,
        )
        .unwrap();
        assert_eq!(agg.seeds, vec![7]);
        assert_eq!(agg.mean.auc_roc, 0.8);
        assert_eq!(agg.std, RankingMetrics::default());
    }

    #[test]
    fn sample_std_and_seeds() {
        let agg = aggregate_runs(
            |s| {
                Ok(RankingMetrics {
                    auc_roc: s as f64,
                    auc_pr: 1.0,
                })
            },
            3,
            10,
        )
        .unwrap();
        assert_eq!(agg.seeds, vec![10, 11, 12]);
        assert_eq!(agg.mean.auc_roc, 11.0);
        assert_eq!(agg.std.auc_roc, 1.0);
        assert_eq!(agg.std.auc_pr, 0.0);
    }

    #[test]
    fn failure_reports_seed() {
        let err = aggregate_runs(
            |s| {
                if s == 4 {
                    Err(DevNetError::DegenerateInput("boom"))
                } else {
                    Ok(RankingMetrics::default())
                }
            },
            5,
            2,
        )
        .unwrap_err();
        assert!(matches!(err, DevNetError::RunFailed { seed: 4, .. }));
        assert!(aggregate_runs(|_| Ok(RankingMetrics::default()), 0, 0).is_err());
    }
}
