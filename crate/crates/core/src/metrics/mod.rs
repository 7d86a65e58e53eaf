//! Classification metrics and ranking error for explanations.
//!
//! Binary tasks treat class 0 as the positive class and class 1 as the
//! negative class; specificity is the recall of class 1.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Only for two classes.
    pub specificity: Option<f64>,
    pub auc: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Ratios that had a zero denominator and were set to 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn ratio(num: usize, den: usize, what: impl FnOnce() -> String, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(what());
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Area under the ROC curve of `scores` for the positives flagged in
/// `positive`, by the trapezoidal rule over the curve with tied scores
/// merged into one step. `None` when either side is empty.
pub fn roc_auc(positive: &[bool], scores: &[f64]) -> Option<f64> {
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (tpr, fpr) = (tp as f64 / p as f64, fp as f64 / n as f64);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

/// Accuracy, macro precision/recall/F1, binary specificity and macro
/// one-vs-rest AUC.
///
/// `scores[i][c]` is the score of class `c` for sample `i`. Zero
/// denominators give 0 and a warning.
pub fn classification_metrics(
    labels: &[usize],
    predictions: &[usize],
    scores: &[Vec<f64>],
    classes: usize,
) -> Result<MetricSuite> {
    if labels.len() != predictions.len() || labels.len() != scores.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} labels, {} predictions, {} score rows",
            labels.len(),
            predictions.len(),
            scores.len()
        )));
    }
    if classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if let Some(&c) = labels.iter().chain(predictions).find(|&&c| c >= classes) {
        return Err(Error::invalid(format!("class index {c} >= {classes}")));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != classes) {
        return Err(Error::invalid(format!("score row of length {} for {classes} classes", row.len())));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&t, &p) in labels.iter().zip(predictions) {
        confusion[t][p] += 1;
    }
    let mut warnings = Vec::new();
    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = confusion[c][c];
        let predicted: usize = (0..classes).map(|t| confusion[t][c]).sum();
        let support: usize = confusion[c].iter().sum();
        let precision = ratio(tp, predicted, || format!("precision of class {c}: no predictions"), &mut warnings);
        let recall = ratio(tp, support, || format!("recall of class {c}: no samples"), &mut warnings);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let positive: Vec<bool> = labels.iter().map(|&t| t == c).collect();
        let column: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let auc = roc_auc(&positive, &column).unwrap_or_else(|| {
            warnings.push(format!("auc of class {c}: one-sided labels"));
            0.0
        });
        per_class.push(ClassMetrics { precision, recall, f1, auc, support });
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let accuracy = ratio(correct, labels.len(), || "accuracy: no samples".into(), &mut warnings);
    let macro_avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / classes as f64;
    let specificity = (classes == 2).then(|| {
        let negatives = confusion[1][0] + confusion[1][1];
        ratio(confusion[1][1], negatives, || "specificity: no negative samples".into(), &mut warnings)
    });
    Ok(MetricSuite {
        accuracy,
        precision: macro_avg(|m| m.precision),
        recall: macro_avg(|m| m.recall),
        f1: macro_avg(|m| m.f1),
        specificity,
        auc: macro_avg(|m| m.auc),
        per_class,
        confusion,
        warnings,
    })
}

/// CSV rows `class,precision,recall,f1,auc,support`.
pub fn per_class_csv(suite: &MetricSuite, class_names: &[String]) -> String {
    let mut out = String::from("class,precision,recall,f1,auc,support\n");
    for (i, m) in suite.per_class.iter().enumerate() {
        let name = class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
        out.push_str(&format!("{name},{},{},{},{},{}\n", m.precision, m.recall, m.f1, m.auc, m.support));
    }
    out
}

/// Fraction of cases whose ground-truth rank (1-based) exceeds `k`.
pub fn error_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::invalid("error@k needs at least one case"));
    }
    if k == 0 || ranks.contains(&0) {
        return Err(Error::invalid("ranks and k start at 1"));
    }
    Ok(ranks.iter().filter(|&&r| r > k).count() as f64 / ranks.len() as f64)
}

/// Monte-Carlo error@k of an explainer that ranks tokens in a uniformly
/// random order: the ground-truth token of a case with `n` tokens lands at
/// a uniform rank in `1..=n`.
pub fn random_baseline_error_at_k(token_counts: &[usize], k: usize, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if token_counts.is_empty() || token_counts.contains(&0) {
        return Err(Error::invalid("every case needs at least one token"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0usize;
    for _ in 0..trials {
        for &n in token_counts {
            if rng.gen_range(1..=n) > k {
                errors += 1;
            }
        }
    }
    Ok(errors as f64 / (trials * token_counts.len()) as f64)
}

#[cfg(test)]
mod tests;
