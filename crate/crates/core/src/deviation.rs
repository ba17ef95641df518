//! Gaussian-prior reference scores and the Z-score deviation loss.
//!
//! For every mini-batch, `l` scores of hypothetical normal objects are drawn
//! from `N(mu, sigma^2)`; their mean and (population) standard deviation give
//! the reference `(mu_r, sigma_r)`. A score's deviation is its Z-score against
//! that reference, and the loss is
//!
//! ```text
//! L = (1 - y) |dev| + y max(0, a - dev)
//! ```
//!
//! pulling normal objects onto the reference and pushing labeled anomalies at
//! least `a` reference deviations into the upper tail.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::Label;

/// Below this reference spread, Z-scores are refused.
pub const SIGMA_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mu: f64,
    pub sigma: f64,
    /// Number of reference draws per mini-batch.
    pub l: usize,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            mu: 0.0,
            sigma: 1.0,
            l: 5000,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(DevNetError::InvalidConfig("prior mu must be finite".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DevNetError::InvalidConfig(format!(
                "prior sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.l < 2 {
            return Err(DevNetError::InvalidConfig(format!(
                "prior needs at least 2 reference draws, got {}",
                self.l
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceStats {
    pub mu_r: f64,
    pub sigma_r: f64,
}

impl ReferenceStats {
    /// Mean and population standard deviation of a set of reference scores.
    pub fn from_draws(draws: &[f64]) -> Self {
        let n = draws.len() as f64;
        let mu_r = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|r| (r - mu_r).powi(2)).sum::<f64>() / n;
        ReferenceStats {
            mu_r,
            sigma_r: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Margin, in reference standard deviations, demanded of labeled anomalies.
    pub a: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { a: 5.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(DevNetError::InvalidConfig(format!(
                "loss margin a must be positive, got {}",
                self.a
            )));
        }
        Ok(())
    }
}

/// Draws `l` reference scores from the prior and summarizes them.
pub fn sample_reference<R: Rng + ?Sized>(prior: &PriorConfig, rng: &mut R) -> ReferenceStats {
    let draws: Vec<f64> = (0..prior.l)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            prior.mu + prior.sigma * z
        })
        .collect();
    ReferenceStats::from_draws(&draws)
}

/// Z-score of `score` against the reference.
pub fn deviation(score: f64, reference: &ReferenceStats) -> Result<f64> {
    if reference.sigma_r.is_nan() || reference.sigma_r < SIGMA_GUARD {
        return Err(DevNetError::DegenerateReference {
            sigma_r: reference.sigma_r,
        });
    }
    Ok((score - reference.mu_r) / reference.sigma_r)
}

pub fn deviation_loss(dev: f64, label: Label, cfg: &LossConfig) -> f64 {
    match label {
        Label::Normal => dev.abs(),
        Label::Anomaly => (cfg.a - dev).max(0.0),
    }
}

/// Derivative of the deviation loss with respect to the raw score.
///
/// Both kinks (`dev = 0` for normals, `dev = a` for anomalies) get a zero
/// subgradient.
pub fn loss_gradient_wrt_score(
    score: f64,
    label: Label,
    reference: &ReferenceStats,
    cfg: &LossConfig,
) -> Result<f64> {
    let dev = deviation(score, reference)?;
    let slope = match label {
        Label::Normal => {
            if dev > 0.0 {
                1.0
            } else if dev < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Label::Anomaly => {
            if dev < cfg.a {
                -1.0
            } else {
                0.0
            }
        }
    };
    Ok(slope / reference.sigma_r)
}
