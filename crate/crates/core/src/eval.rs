//! Task metrics and run reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank-based (Mann-Whitney) area under the ROC curve. Tied scores share
/// their average rank, so a tied positive/negative pair counts 1/2.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("in score {i}"),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(format!(
            "AUC needs both classes, got {pos} positive and {neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (doubled) positive ranks keeps tie averaging exact in integers.
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let doubled_rank = (i + 1 + j + 1) as u64;
        let positives = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        rank_sum2 += doubled_rank * positives;
        i = j + 1;
    }
    let (p, n) = (pos as u64, neg as u64);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

fn check_classes(predictions: &[usize], labels: &[usize], classes: usize) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions to score"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if let Some(c) = predictions.iter().chain(labels).find(|&&c| c >= classes) {
        return Err(Error::invalid(format!(
            "class {c} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Per-class `(tp, fp, fn)` counts.
fn confusion(predictions: &[usize], labels: &[usize], classes: usize) -> Vec<[u64; 3]> {
    let mut counts = vec![[0u64; 3]; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            counts[p][0] += 1;
        } else {
            counts[p][1] += 1;
            counts[l][2] += 1;
        }
    }
    counts
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// F1 over pooled true/false counts of every class.
pub fn micro_f1(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    check_classes(predictions, labels, classes)?;
    let [tp, fp, fn_] = confusion(predictions, labels, classes)
        .into_iter()
        .fold([0; 3], |a, c| [a[0] + c[0], a[1] + c[1], a[2] + c[2]]);
    Ok(f1(tp, fp, fn_))
}

/// Unweighted mean of per-class F1. A class that is never predicted and
/// never present contributes 0.
pub fn macro_f1(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    check_classes(predictions, labels, classes)?;
    let sum: f64 = confusion(predictions, labels, classes)
        .into_iter()
        .map(|[tp, fp, fn_]| f1(tp, fp, fn_))
        .sum();
    Ok(sum / classes as f64)
}

/// Index of the largest probability; ties go to the lowest class.
pub fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Macro-averaged one-vs-rest AUC. Classes without positives or without
/// negatives are skipped with a warning.
pub fn multiclass_auc(probabilities: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::invalid("probability and label counts differ"));
    }
    if let Some(p) = probabilities.iter().find(|p| p.len() != classes) {
        return Err(Error::invalid(format!(
            "probability vector of length {} for {classes} classes",
            p.len()
        )));
    }
    let mut total = 0.0;
    let mut used = 0;
    for c in 0..classes {
        let binary: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        if !binary.contains(&true) || !binary.contains(&false) {
            log::warn!("class {c} has no positives or no negatives; skipped in multiclass AUC");
            continue;
        }
        let scores: Vec<f64> = probabilities.iter().map(|p| p[c]).collect();
        total += auc(&scores, &binary)?;
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid(
            "no class has both positive and negative examples",
        ));
    }
    Ok(total / used as f64)
}

/// Outcome of one run, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    pub dataset: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    /// Notes on how metrics were computed, e.g. the multiclass AUC reduction.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// One aggregated metric row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub config_id: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

/// `config_id,seed,metric,value` CSV with a header line.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("config_id,seed,metric,value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.config_id, r.seed, r.metric, r.value
        ));
    }
    out
}
