use std::path::Path;

use serde::Serialize;

use super::model::{score_query, WsmModel};
use super::{LabeledSet, WsmError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WsmMetrics {
    pub roc_auc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

impl WsmMetrics {
    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("roc_auc", self.roc_auc),
            ("f1", self.f1),
            ("precision", self.precision),
            ("recall", self.recall),
            ("threshold", self.threshold),
        ]
    }

    /// `metric,value` CSV, plus any extra rows (e.g. alpha, sample sizes).
    pub fn write_csv(&self, path: &Path, extra: &[(&str, f64)]) -> std::io::Result<()> {
        let mut body = String::from("metric,value\n");
        for (k, v) in self.rows().iter().copied().chain(extra.iter().copied()) {
            body.push_str(&format!("{k},{v}\n"));
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, body)
    }
}

/// ROC AUC via the Mann–Whitney rank-sum: average ranks over ties, so a
/// tied positive/negative pair counts one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, WsmError> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(WsmError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// Precision, recall and F1 for `score >= threshold` predictions.
pub fn threshold_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> (f64, f64, f64) {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let precision = ratio(tp, fp);
    let recall = ratio(tp, fn_);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    (precision, recall, f1)
}

pub fn evaluate_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<WsmMetrics, WsmError> {
    let roc_auc = roc_auc(scores, labels)?;
    let (precision, recall, f1) = threshold_metrics(scores, labels, threshold);
    Ok(WsmMetrics { roc_auc, f1, precision, recall, threshold })
}

pub fn evaluate_wsm(m: &WsmModel, eval_set: &LabeledSet, threshold: f64) -> Result<WsmMetrics, WsmError> {
    let scores: Vec<f64> = eval_set.examples.iter().map(|e| score_query(m, &e.event)).collect();
    let labels: Vec<bool> = eval_set.examples.iter().map(|e| e.label).collect();
    evaluate_scores(&scores, &labels, threshold)
}
