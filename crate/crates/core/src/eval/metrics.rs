use crate::error::{DevNetError, Result};
use crate::Label;

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(DevNetError::shape(
            "metric inputs",
            scores.len(),
            labels.len(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(DevNetError::DegenerateInput("scores contain NaN"));
    }
    Ok(())
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability
/// that a random anomaly outscores a random normal, ties counting one half.
pub fn auc_roc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_anomaly()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DevNetError::UndefinedMetric(
            "AUC-ROC needs both anomalies and normals",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of (1-based, tie-averaged) ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j]
            .iter()
            .filter(|&&k| labels[k].is_anomaly())
            .count();
        rank_sum += mid_rank * pos_in_group as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision: mean over anomalies of the precision at each anomaly's rank.
///
/// Objects are ranked by descending score; tied scores keep their input
/// order, so the result depends on row order when ties straddle classes.
pub fn average_precision(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_anomaly()).count();
    if n_pos == 0 {
        return Err(DevNetError::UndefinedMetric(
            "average precision needs at least one anomaly",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (r, &k) in order.iter().enumerate() {
        if labels[k].is_anomaly() {
            hits += 1;
            total += hits as f64 / (r + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}
