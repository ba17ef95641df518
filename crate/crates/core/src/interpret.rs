//! Reading anomaly scores as probabilities under the Gaussian prior.
//!
//! Because normal objects are trained to score like draws from `N(mu, sigma^2)`,
//! a score `s` lies outside `mu +- z_p sigma` with probability `2(1 - p)` for
//! normal data. This module converts scores to those tail probabilities and
//! confidence levels back to score thresholds.
//!
//! The prior `(mu, sigma)` is used here, not a per-batch reference, so scores
//! from different runs share one scale.

use serde::{Deserialize, Serialize};

use crate::deviation::PriorConfig;
use crate::error::{DevNetError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub score: f64,
    pub z: f64,
    /// `P(|Z| >= |z|)`.
    pub two_sided_p: f64,
    /// `P(Z >= z)`.
    pub upper_tail_p: f64,
}

pub fn score_to_probability(score: f64, prior: &PriorConfig) -> Result<Interpretation> {
    check_prior(prior)?;
    let z = (score - prior.mu) / prior.sigma;
    Ok(Interpretation {
        score,
        z,
        two_sided_p: libm::erfc(z.abs() / std::f64::consts::SQRT_2),
        upper_tail_p: normal_sf(z),
    })
}

/// Score above which a normal object falls with probability `1 - p`.
pub fn threshold_for_confidence(p: f64, prior: &PriorConfig) -> Result<f64> {
    check_prior(prior)?;
    if !(p > 0.5 && p < 1.0) {
        return Err(DevNetError::OutOfRange(format!(
            "confidence level must lie in (0.5, 1), got {p}"
        )));
    }
    Ok(prior.mu + prior.sigma * normal_ppf(p))
}

fn check_prior(prior: &PriorConfig) -> Result<()> {
    if prior.sigma.is_nan() || prior.sigma <= 0.0 {
        return Err(DevNetError::InvalidConfig(format!(
            "prior sigma must be positive, got {}",
            prior.sigma
        )));
    }
    Ok(())
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - cdf(z)`, accurate in the upper tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile for `p` in (0, 1).
///
/// Rational approximation (Acklam) followed by one Halley correction step
/// against the erfc-based CDF.
pub fn normal_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let mut x = if p < P_LOW {
        tail(p)
    } else if p > 1.0 - P_LOW {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Error measured on whichever tail is small, to avoid cancellation.
    let e = if p > 0.5 {
        (1.0 - p) - normal_sf(x)
    } else {
        normal_cdf(x) - p
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x -= u / (1.0 + 0.5 * x * u);
    x
}
