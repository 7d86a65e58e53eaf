use super::{argmax, require_classes, Classifier, PreparedSample, TaskSpec};
use crate::encoder::softmax;
use crate::error::Result;
use std::collections::BTreeMap;

fn features(tokens: &[String]) -> impl Iterator<Item = String> + '_ {
    tokens.iter().cloned().chain(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])))
}

/// Multinomial naive Bayes over unigram and bigram counts with additive
/// smoothing. Features never seen in training are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramBaseline {
    task: TaskSpec,
    log_prior: Vec<f64>,
    /// Per feature, the log likelihood under each class.
    log_likelihood: BTreeMap<String, Vec<f64>>,
}

pub fn train_ngram_baseline(samples: &[PreparedSample], task: &TaskSpec, alpha: f64) -> Result<NGramBaseline> {
    let counts = require_classes(samples, task)?;
    let k = task.classes();
    let mut feature_counts: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut totals = vec![0.0; k];
    for s in samples {
        let c = s.label.unwrap();
        for f in features(&s.tokens) {
            feature_counts.entry(f).or_insert_with(|| vec![0.0; k])[c] += 1.0;
            totals[c] += 1.0;
        }
    }
    let v = feature_counts.len() as f64;
    let log_likelihood = feature_counts
        .into_iter()
        .map(|(f, n)| {
            let ll = (0..k).map(|c| ((n[c] + alpha) / (totals[c] + alpha * v)).ln()).collect();
            (f, ll)
        })
        .collect();
    let n: usize = counts.iter().sum();
    // Absent classes get a tiny prior instead of -inf.
    let log_prior = counts.iter().map(|&c| (c.max(1) as f64 / (n + k) as f64).ln()).collect();
    Ok(NGramBaseline { task: task.clone(), log_prior, log_likelihood })
}

impl Classifier for NGramBaseline {
    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn scores(&self, tokens: &[String]) -> Result<Vec<f64>> {
        let mut z = self.log_prior.clone();
        for f in features(tokens) {
            if let Some(ll) = self.log_likelihood.get(&f) {
                z.iter_mut().zip(ll).for_each(|(a, b)| *a += b);
            }
        }
        Ok(softmax(&z))
    }
}

/// Predicts the most frequent training class for everything; scores are
/// the training class frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityBaseline {
    task: TaskSpec,
    prior: Vec<f64>,
}

impl MajorityBaseline {
    pub fn class(&self) -> usize {
        argmax(&self.prior)
    }
}

pub fn train_majority_baseline(samples: &[PreparedSample], task: &TaskSpec) -> Result<MajorityBaseline> {
    let counts = require_classes(samples, task)?;
    let n: usize = counts.iter().sum();
    Ok(MajorityBaseline { task: task.clone(), prior: counts.iter().map(|&c| c as f64 / n as f64).collect() })
}

impl Classifier for MajorityBaseline {
    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn scores(&self, _tokens: &[String]) -> Result<Vec<f64>> {
        Ok(self.prior.clone())
    }
}
