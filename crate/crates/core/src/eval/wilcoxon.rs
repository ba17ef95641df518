use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::interpret::normal_sf;

/// Largest number of non-zero differences handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Non-zero paired differences used.
    pub n: usize,
    /// Rank sum of the positive differences (tie-averaged ranks).
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Paired Wilcoxon signed-rank test of `a` against `b`.
///
/// Zero differences are dropped and tied magnitudes share averaged ranks.
/// Up to [`EXACT_MAX_N`] differences the p-value comes from the exact null
/// distribution over all sign assignments; beyond that a normal
/// approximation with tie and continuity corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(DevNetError::shape("paired samples", a.len(), b.len()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| d.is_nan()) {
        return Err(DevNetError::DegenerateInput("paired samples contain NaN"));
    }
    if diffs.is_empty() {
        return Err(DevNetError::DegenerateInput(
            "all paired differences are zero",
        ));
    }
    let n = diffs.len();
    if n < 5 {
        return Err(DevNetError::DegenerateInput(
            "fewer than 5 non-zero paired differences",
        ));
    }

    let doubled = doubled_ranks(&diffs);
    let w_plus2: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total2: u64 = doubled.iter().sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;

    let (p_value, exact) = if n <= EXACT_MAX_N {
        (exact_p(&doubled, w_plus2), true)
    } else {
        (normal_p(&diffs, &doubled, w_plus), false)
    };
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p_value,
        exact,
    })
}

/// Twice the tie-averaged rank of each |difference| (always an integer).
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // ranks i+1..=j average to (i+1+j)/2
        let r2 = (i + 1 + j) as u64;
        for &k in &order[i..j] {
            ranks[k] = r2;
        }
        i = j;
    }
    ranks
}

fn exact_p(doubled: &[u64], observed: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    // counts[s] = number of sign assignments whose positive doubled-rank sum is s
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let all = (1u64 << doubled.len()) as f64;
    let lower: u64 = counts[..=observed as usize].iter().sum();
    let upper: u64 = counts[observed as usize..].iter().sum();
    (2.0 * lower.min(upper) as f64 / all).min(1.0)
}

fn normal_p(diffs: &[f64], doubled: &[u64], w_plus: f64) -> f64 {
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted: Vec<u64> = doubled.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (2.0 * normal_sf(z)).min(1.0)
}
