use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::Dataset;
use crate::error::{DevNetError, Result};
use crate::{seed, Label};

/// Normals from `N(0, I_d)`, anomalies from `N(separation * 1, I_d)`.
///
/// Normals come first, then anomalies.
pub fn synth_gaussian(
    n_normal: usize,
    n_anomaly: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if d == 0 || n_normal + n_anomaly == 0 {
        return Err(DevNetError::InvalidConfig(
            "synthetic data needs at least one row and one dimension".into(),
        ));
    }
    let mut rng = seed::rng(seed);
    let n = n_normal + n_anomaly;
    let mut features = Array2::zeros((n, d));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let shift = if i < n_normal { 0.0 } else { separation };
        for v in row.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = shift + z;
        }
    }
    let labels = (0..n).map(|i| Label::from_bool(i >= n_normal)).collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::new(features, labels, names)
}
