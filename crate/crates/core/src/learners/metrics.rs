use serde::{Deserialize, Serialize};

/// Ranking and classification metrics for one scored month.
///
/// `ap` and `auc` are `None` when only one class is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub ap: Option<f64>,
    pub auc: Option<f64>,
    pub f1: f64,
    pub brier: f64,
    pub threshold_used: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // sort_by is stable: tied scores keep input order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Mean of precision@rank over positive ranks, ranking by descending score.
/// Tied scores are ranked in input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let mut tp = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in descending_order(scores).iter().enumerate() {
        if labels[i] {
            tp += 1;
            sum += tp as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

/// Mann-Whitney AUC; tied positive/negative pairs count one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks of positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// F1 of the rule `score >= threshold`; 0 when there are no positives and no
/// predicted positives.
pub fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Threshold among the observed scores maximizing F1 of `score >= t`; the
/// highest such score wins ties. `None` without positives.
pub fn best_f1_threshold(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return None;
    }
    let order = descending_order(scores);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let f1 = 2.0 * tp as f64 / (tp + fp + n_pos) as f64;
        if best.is_none_or(|(b, _)| f1 > b) {
            best = Some((f1, s));
        }
    }
    best.map(|(_, t)| t)
}

pub fn brier_score(probs: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(probs.len(), labels.len());
    if probs.is_empty() {
        return 0.0;
    }
    let sse: f64 = probs.iter().zip(labels).map(|(&p, &l)| (p - f64::from(u8::from(l))).powi(2)).sum();
    sse / probs.len() as f64
}

pub fn compute_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> MetricSet {
    let n_pos = labels.iter().filter(|&&l| l).count();
    MetricSet {
        ap: average_precision(scores, labels),
        auc: roc_auc(scores, labels),
        f1: f1_at(scores, labels, threshold),
        brier: brier_score(scores, labels),
        threshold_used: threshold,
        n_pos,
        n_neg: labels.len() - n_pos,
    }
}
