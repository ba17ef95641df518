use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::Dataset;
use crate::error::{DevNetError, Result};
use crate::{seed, Label};

/// Stratified split: each class is shuffled and cut at `fraction` independently.
///
/// Rows keep their original relative order inside each split.
pub fn split_train_test(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DevNetError::OutOfRange(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, class) in [(Label::Normal, "normal"), (Label::Anomaly, "anomaly")] {
        let mut idx = ds.indices_of(label);
        if idx.len() < 2 {
            return Err(DevNetError::ClassTooSmall {
                class,
                count: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        let n_train = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&train), ds.select(&test)))
}

/// Anomaly count giving `rate` contamination on top of `n_normal` normals.
pub fn contamination_target(n_normal: usize, rate: f64) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    (rate * n_normal as f64 / (1.0 - rate)).round() as usize
}

/// Resamples the anomalies so they make up `rate` of the rows.
///
/// Normal rows are all kept. Surplus anomalies are dropped at random;
/// shortfalls are filled by duplicating randomly chosen anomalies. Kept rows
/// stay in their original order, duplicates are appended.
pub fn adjust_contamination(ds: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(0.0..=0.5).contains(&rate) {
        return Err(DevNetError::OutOfRange(format!(
            "contamination rate must lie in [0, 0.5], got {rate}"
        )));
    }
    let normals = ds.indices_of(Label::Normal);
    let anomalies = ds.indices_of(Label::Anomaly);
    let target = contamination_target(normals.len(), rate);
    if target > 0 && anomalies.is_empty() {
        return Err(DevNetError::NoAnomalies { rate });
    }
    let mut rng = seed::rng(seed);
    let mut keep: Vec<usize> = normals;
    let mut extra = Vec::new();
    if target <= anomalies.len() {
        keep.extend(
            index::sample(&mut rng, anomalies.len(), target)
                .into_iter()
                .map(|i| anomalies[i]),
        );
    } else {
        keep.extend_from_slice(&anomalies);
        for _ in anomalies.len()..target {
            extra.push(anomalies[rng.random_range(0..anomalies.len())]);
        }
    }
    keep.sort_unstable();
    keep.extend(extra);
    Ok(ds.select(&keep))
}

/// Picks `k` distinct rows of the pool as labeled anomalies; returns them and
/// the remaining rows (in original order).
pub fn draw_labeled_anomalies(
    pool: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if k == 0 {
        return Err(DevNetError::InvalidConfig(
            "at least one labeled anomaly is required".into(),
        ));
    }
    if pool.nrows() < k {
        return Err(DevNetError::BudgetTooLarge {
            requested: k,
            available: pool.nrows(),
        });
    }
    let mut rng = seed::rng(seed);
    let chosen = index::sample(&mut rng, pool.nrows(), k).into_vec();
    let mut taken = vec![false; pool.nrows()];
    for &i in &chosen {
        taken[i] = true;
    }
    let rest: Vec<usize> = (0..pool.nrows()).filter(|&i| !taken[i]).collect();
    Ok((pool.select(Axis(0), &chosen), pool.select(Axis(0), &rest)))
}
