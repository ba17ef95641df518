//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use devnet::deviation::LossConfig;
use devnet::trainer::batch_loss;
use devnet::{Architecture, Label, Parameters, ReferenceStats};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-5;
pub const KINK_MARGIN: f64 = 1e-6;
/// Magnitude below which gradient entries are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

/// A random loss landscape: network, batch, labels and per-output references.
pub struct GradProblem {
    pub params: Parameters,
    pub batch: Array2<f64>,
    pub labels: Vec<Label>,
    pub references: Vec<ReferenceStats>,
    pub loss: LossConfig,
    pub lambda: f64,
}

impl GradProblem {
    pub fn random(seed: u64) -> Self {
        let mut rng = devnet::seed::rng(seed);
        let input_dim = rng.random_range(1..=8);
        let depth = rng.random_range(0..=3);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=50)).collect();
        let rep_mode = depth > 0 && rng.random_bool(0.25);
        let arch = Architecture::new(input_dim, hidden, rep_mode).unwrap();
        let mut params = Parameters::init(&arch, seed).unwrap();
        // Glorot weights with non-zero biases everywhere.
        for (id, t) in params.tensors_mut() {
            if !id.is_hidden_kernel() {
                for v in t.iter_mut() {
                    *v += 0.3 * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        let rows = rng.random_range(1..=16);
        let batch = Array2::from_shape_fn((rows, input_dim), |_| rng.sample(StandardNormal));
        let labels = (0..rows)
            .map(|_| Label::from_bool(rng.random_bool(0.5)))
            .collect();
        let references = (0..arch.output_dim())
            .map(|_| ReferenceStats {
                mu_r: 0.1 * rng.sample::<f64, _>(StandardNormal),
                sigma_r: rng.random_range(0.5..1.5),
            })
            .collect();
        GradProblem {
            params,
            batch,
            labels,
            references,
            loss: LossConfig::default(),
            lambda: 0.01,
        }
    }

    pub fn loss_at(&self, params: &Parameters) -> f64 {
        batch_loss(
            params,
            self.batch.view(),
            &self.labels,
            &self.references,
            &self.loss,
            self.lambda,
        )
        .unwrap()
        .0
    }

    /// Which side of every ReLU and loss kink the problem sits on, and the
    /// distance to the nearest kink.
    pub fn regime(&self, params: &Parameters) -> (Vec<bool>, f64) {
        let (out, cache) = params.forward(self.batch.view()).unwrap();
        let mut signs = Vec::new();
        let mut nearest = f64::INFINITY;
        for z in cache.pre_activations() {
            for &v in z.iter() {
                signs.push(v > 0.0);
                nearest = nearest.min(v.abs());
            }
        }
        for ((i, j), &s) in out.indexed_iter() {
            let r = &self.references[j];
            let dev = (s - r.mu_r) / r.sigma_r;
            let kink = if self.labels[i].is_anomaly() {
                self.loss.a
            } else {
                0.0
            };
            signs.push(dev > kink);
            nearest = nearest.min((dev - kink).abs());
        }
        (signs, nearest)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct GradReport {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
}

/// Central differences against the analytic gradient of the full regularized
/// loss, for every parameter. Coordinates whose perturbation comes within
/// [`KINK_MARGIN`] of, or crosses, a ReLU or hinge kink are skipped.
pub fn check_gradients(problem: &GradProblem) -> GradReport {
    let (_, analytic) = batch_loss(
        &problem.params,
        problem.batch.view(),
        &problem.labels,
        &problem.references,
        &problem.loss,
        problem.lambda,
    )
    .unwrap();
    let (base_regime, base_gap) = problem.regime(&problem.params);
    let mut report = GradReport::default();
    let analytic: Vec<Vec<f64>> = analytic
        .tensors()
        .into_iter()
        .map(|(_, t)| t.to_vec())
        .collect();
    for (t, grads) in analytic.iter().enumerate() {
        for (k, &g) in grads.iter().enumerate() {
            let shifted = |h: f64| {
                let mut p = problem.params.clone();
                p.tensors_mut()[t].1[k] += h;
                p
            };
            let plus = shifted(FD_STEP);
            let minus = shifted(-FD_STEP);
            let (rp, gp) = problem.regime(&plus);
            let (rm, gm) = problem.regime(&minus);
            if base_gap < KINK_MARGIN
                || gp < KINK_MARGIN
                || gm < KINK_MARGIN
                || rp != base_regime
                || rm != base_regime
            {
                report.skipped += 1;
                continue;
            }
            let numeric = (problem.loss_at(&plus) - problem.loss_at(&minus)) / (2.0 * FD_STEP);
            let scale = g.abs().max(numeric.abs()).max(REL_FLOOR);
            report.max_rel_error = report.max_rel_error.max((g - numeric).abs() / scale);
            report.checked += 1;
        }
    }
    report
}

/// Pairwise definition of AUC-ROC: wins plus half ties over all
/// anomaly/normal pairs.
pub fn auc_pairwise(scores: &[f64], labels: &[Label]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0usize;
    for (i, li) in labels.iter().enumerate() {
        if !li.is_anomaly() {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_anomaly() {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    credit / pairs as f64
}

/// Average precision from the definition, with the rank of each object
/// counted directly: everything scoring higher, plus earlier rows with an
/// equal score, ranks above it.
pub fn ap_definitional(scores: &[f64], labels: &[Label]) -> f64 {
    let n = scores.len();
    let rank = |i: usize| {
        1 + (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count()
    };
    let mut anomaly_ranks: Vec<usize> = (0..n)
        .filter(|&i| labels[i].is_anomaly())
        .map(rank)
        .collect();
    anomaly_ranks.sort_unstable();
    let mut total = 0.0;
    for &r in &anomaly_ranks {
        let above = anomaly_ranks.iter().filter(|&&q| q <= r).count();
        total += above as f64 / r as f64;
    }
    total / anomaly_ranks.len() as f64
}

/// Two-sided exact signed-rank p-value by listing all `2^n` sign patterns.
pub fn wilcoxon_enumerated(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|&x| x != 0.0).collect();
    let n = d.len();
    // doubled mid-ranks: 2 * (#smaller) + (#equal) + 1
    let ranks: Vec<u64> = d
        .iter()
        .map(|x| {
            let smaller = d.iter().filter(|y| y.abs() < x.abs()).count() as u64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let observed: u64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: u64 = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= observed {
            le += 1;
        }
        if w >= observed {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

/// Standard normal CDF from the series
/// `Phi(x) = 1/2 + phi(x) * sum_n x^(2n+1) / (1*3*...*(2n+1))`.
pub fn phi_series(x: f64) -> f64 {
    let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= x * x / f64::from(2 * n + 1);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    0.5 + density * sum
}

/// Scores by Euclidean distance to the unlabeled-data mean: an unsupervised
/// baseline that ignores the labeled anomalies.
pub fn distance_baseline(unlabeled: &Array2<f64>, test: &Array2<f64>) -> Vec<f64> {
    let center = unlabeled.mean_axis(ndarray::Axis(0)).unwrap();
    test.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .zip(&center)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}
