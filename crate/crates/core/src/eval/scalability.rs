use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::synth_gaussian;
use crate::error::{DevNetError, Result};
use crate::trainer::{train_variant, DevNetConfig, TrainingSet};
use crate::{seed, Label};

const LABELED: usize = 30;
const CONTAMINATION: f64 = 0.02;
const SEPARATION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Rows in both the training and the test set.
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub d: usize,
    pub wall_seconds: f64,
}

pub fn size_sweep(sizes: &[usize], d: usize) -> Vec<SweepPoint> {
    sizes.iter().map(|&n| SweepPoint { n, d }).collect()
}

pub fn dimension_sweep(dims: &[usize], n: usize) -> Vec<SweepPoint> {
    dims.iter().map(|&d| SweepPoint { n, d }).collect()
}

/// Wall time of training plus scoring an equally sized test set at each point.
///
/// Data generation is not timed. The first point is run once untimed to warm up.
pub fn scalability_sweep(
    points: &[SweepPoint],
    cfg: &DevNetConfig,
    base_seed: u64,
) -> Result<Vec<TimingRow>> {
    if points.len() < 3 {
        return Err(DevNetError::InvalidConfig(
            "a scalability sweep needs at least 3 points".into(),
        ));
    }
    time_point(points[0], cfg, base_seed)?;
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            Ok(TimingRow {
                n: p.n,
                d: p.d,
                wall_seconds: time_point(p, cfg, seed::derive(base_seed, i as u64 + 1))?,
            })
        })
        .collect()
}

fn time_point(p: SweepPoint, cfg: &DevNetConfig, seed: u64) -> Result<f64> {
    if p.n <= LABELED + cfg.train.batch_size / 2 {
        return Err(DevNetError::InvalidConfig(format!(
            "sweep size {} is too small for the batch size",
            p.n
        )));
    }
    let n_unlabeled = p.n - LABELED;
    let u_anomalies = (CONTAMINATION * n_unlabeled as f64).round() as usize;
    let train_data = synth_gaussian(
        n_unlabeled - u_anomalies,
        u_anomalies + LABELED,
        p.d,
        SEPARATION,
        seed::derive(seed, 1),
    )?;
    // The last LABELED rows are anomalies; they become the labeled set.
    let unlabeled = train_data
        .features
        .slice(ndarray::s![..n_unlabeled, ..])
        .to_owned();
    let known = train_data
        .features
        .slice(ndarray::s![n_unlabeled.., ..])
        .to_owned();
    debug_assert!(train_data.labels[n_unlabeled..]
        .iter()
        .all(|&l| l == Label::Anomaly));
    let ts = TrainingSet::new(unlabeled, known)?;

    let test_anomalies = (CONTAMINATION * p.n as f64).round().max(1.0) as usize;
    let test = synth_gaussian(
        p.n - test_anomalies,
        test_anomalies,
        p.d,
        SEPARATION,
        seed::derive(seed, 2),
    )?;

    let mut run_cfg = *cfg;
    run_cfg.train.seed = seed;
    let start = Instant::now();
    let model = train_variant(&ts, &run_cfg)?;
    let scores = model.predict(test.features.view())?;
    let elapsed = start.elapsed().as_secs_f64();
    std::hint::black_box(scores);
    Ok(elapsed)
}

/// Writes timing rows as `n,d,wall_seconds` CSV.
pub fn write_timing_csv<W: Write>(rows: &[TimingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| DevNetError::Io {
        path: "<timing csv>".into(),
        source,
    })
}
