//! Corpus analytics: per-n-gram level entropy, n-gram overlap between
//! level pairs and misclassification contingency tables.

use crate::corpus::{Dataset, Level};
use crate::error::{Error, Result};
use crate::models::Assessment;
use crate::preprocess::{tokenize, Stopwords};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Version of the analytics report layout.
pub const REPORT_VERSION: u32 = 1;

/// Token sequences paired with their level.
pub type TokenizedCorpus = Vec<(Vec<String>, Level)>;

pub fn tokenize_dataset(dataset: &Dataset, stopwords: &Stopwords) -> TokenizedCorpus {
    dataset
        .samples()
        .iter()
        .map(|s| (tokenize(&s.static_text, stopwords), s.level))
        .collect()
}

/// Per-level occurrence counts of every n-gram of one size, indexed by
/// [`Level::index`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NGramLevelCounts {
    pub n: usize,
    pub counts: BTreeMap<Vec<String>, [usize; 3]>,
}

fn check_n(n: usize) -> Result<()> {
    if (1..=5).contains(&n) {
        Ok(())
    } else {
        Err(Error::invalid(format!("n-gram size {n} outside 1..=5")))
    }
}

/// Sliding-window n-grams within each instruction.
pub fn ngram_counts(corpus: &[(Vec<String>, Level)], n: usize) -> Result<NGramLevelCounts> {
    check_n(n)?;
    let mut counts: BTreeMap<Vec<String>, [usize; 3]> = BTreeMap::new();
    for (tokens, level) in corpus {
        for w in tokens.windows(n) {
            counts.entry(w.to_vec()).or_default()[level.index()] += 1;
        }
    }
    Ok(NGramLevelCounts { n, counts })
}

/// Shannon entropy of the level distribution divided by `ln 3`, so the
/// value is comparable across corpora whatever levels they contain.
pub fn normalized_entropy(counts: [usize; 3]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("entropy of an all-zero count triple"));
    }
    let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    if present.iter().all(|&c| c == present[0]) {
        // k equally likely levels: ln k exactly, so one level gives 0 and
        // three give 1 without rounding.
        return Ok((present.len() as f64).ln() / 3f64.ln());
    }
    let h: f64 = present
        .iter()
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum();
    Ok((h / 3f64.ln()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quantile by linear interpolation between order statistics
/// (`h = (len - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            count: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramEntropy {
    pub n: usize,
    pub ngram: Vec<String>,
    pub counts: [usize; 3],
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyDistribution {
    /// Over every n-gram of every requested size.
    pub pooled: Summary,
    /// Keyed by n; sizes without any n-gram are absent.
    pub per_n: BTreeMap<usize, Summary>,
    #[serde(skip)]
    pub values: Vec<NGramEntropy>,
}

pub fn entropy_distribution(corpus: &[(Vec<String>, Level)], ns: &[usize]) -> Result<EntropyDistribution> {
    let ns: BTreeSet<usize> = ns.iter().copied().collect();
    let mut values = Vec::new();
    let mut per_n = BTreeMap::new();
    for &n in &ns {
        let counts = ngram_counts(corpus, n)?;
        let start = values.len();
        for (ngram, c) in counts.counts {
            values.push(NGramEntropy { n, entropy: normalized_entropy(c)?, ngram, counts: c });
        }
        let of_n: Vec<f64> = values[start..].iter().map(|v| v.entropy).collect();
        if let Some(s) = Summary::of(&of_n) {
            per_n.insert(n, s);
        }
    }
    let all: Vec<f64> = values.iter().map(|v| v.entropy).collect();
    let pooled = Summary::of(&all).ok_or_else(|| Error::invalid("no n-grams to summarize"))?;
    Ok(EntropyDistribution { pooled, per_n, values })
}

/// CSV `n,ngram,info,warning,error,entropy` with the n-gram space-joined.
pub fn entropy_csv(dist: &EntropyDistribution) -> String {
    let mut out = String::from("n,ngram,info,warning,error,entropy\n");
    for v in &dist.values {
        let [i, w, e] = v.counts;
        out.push_str(&format!("{},{},{i},{w},{e},{}\n", v.n, v.ngram.join(" "), v.entropy));
    }
    out
}

fn ngram_set(corpus: &[(Vec<String>, Level)], level: Level, ns: &BTreeSet<usize>) -> BTreeSet<Vec<String>> {
    let mut set = BTreeSet::new();
    for (tokens, l) in corpus.iter().filter(|(_, l)| *l == level) {
        debug_assert_eq!(*l, level);
        for &n in ns {
            set.extend(tokens.windows(n).map(<[String]>::to_vec));
        }
    }
    set
}

/// Jaccard index of the n-gram sets seen at two levels, pooled over `ns`.
pub fn level_pair_overlap(corpus: &[(Vec<String>, Level)], a: Level, b: Level, ns: &[usize]) -> Result<f64> {
    if a == b {
        return Err(Error::invalid("overlap needs two different levels"));
    }
    for &n in ns {
        check_n(n)?;
    }
    let ns: BTreeSet<usize> = ns.iter().copied().collect();
    let sa = ngram_set(corpus, a, &ns);
    let sb = ngram_set(corpus, b, &ns);
    let union = sa.union(&sb).count();
    if union == 0 {
        return Err(Error::invalid(format!("no n-grams at {a} or {b}")));
    }
    Ok(sa.intersection(&sb).count() as f64 / union as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub a: Level,
    pub b: Level,
    pub jaccard: f64,
}

/// Overlap for the pairs error-warning, warning-info and error-info.
pub fn overlap_matrix(corpus: &[(Vec<String>, Level)], ns: &[usize]) -> Result<Vec<PairOverlap>> {
    use Level::*;
    [(Error, Warning), (Warning, Info), (Error, Info)]
        .into_iter()
        .map(|(a, b)| Ok(PairOverlap { a, b, jaccard: level_pair_overlap(corpus, a, b, ns)? }))
        .collect()
}

/// True-by-predicted counts with off-diagonal row percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub classes: Vec<String>,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
    /// Share of each true class's samples predicted as another class, in
    /// percent. The diagonal is `None`; empty rows give 0.
    pub row_percentages: Vec<Vec<Option<f64>>>,
}

pub fn contingency_from(labels: &[usize], predictions: &[usize], classes: &[String]) -> Result<ContingencyTable> {
    if labels.len() != predictions.len() {
        return Err(Error::invalid("labels and predictions differ in length"));
    }
    let k = classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&t, &p) in labels.iter().zip(predictions) {
        if t >= k || p >= k {
            return Err(Error::invalid(format!("class index outside 0..{k}")));
        }
        counts[t][p] += 1;
    }
    let row_percentages = counts
        .iter()
        .enumerate()
        .map(|(t, row)| {
            let total: usize = row.iter().sum();
            row.iter()
                .enumerate()
                .map(|(p, &c)| {
                    (p != t).then(|| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                })
                .collect()
        })
        .collect();
    Ok(ContingencyTable { classes: classes.to_vec(), counts, row_percentages })
}

/// Contingency of a labeled assessment; unlabeled samples are an error.
pub fn contingency(assessment: &Assessment) -> Result<ContingencyTable> {
    let mut labels = Vec::new();
    let mut preds = Vec::new();
    for s in &assessment.samples {
        let label = s.label.ok_or_else(|| Error::invalid(format!("sample {} has no label", s.id)))?;
        labels.push(label);
        preds.push(s.predicted);
    }
    contingency_from(&labels, &preds, &assessment.task.class_names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub ns: Vec<usize>,
    pub pooled: Summary,
    pub per_n: BTreeMap<usize, Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub format_version: u32,
    pub instructions: usize,
    pub level_counts: BTreeMap<Level, usize>,
    pub entropy: EntropyReport,
    pub overlap: Vec<PairOverlap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contingency: Option<ContingencyTable>,
}

/// Entropy and overlap analytics over `ns` (usually 1..=5).
pub fn analyze(dataset: &Dataset, stopwords: &Stopwords, ns: &[usize]) -> Result<(CorpusReport, EntropyDistribution)> {
    let corpus = tokenize_dataset(dataset, stopwords);
    let dist = entropy_distribution(&corpus, ns)?;
    let mut level_counts = BTreeMap::new();
    for s in dataset.samples() {
        *level_counts.entry(s.level).or_insert(0) += 1;
    }
    let report = CorpusReport {
        format_version: REPORT_VERSION,
        instructions: dataset.len(),
        level_counts,
        entropy: EntropyReport { ns: ns.to_vec(), pooled: dist.pooled.clone(), per_n: dist.per_n.clone() },
        overlap: overlap_matrix(&corpus, ns)?,
        contingency: None,
    };
    Ok((report, dist))
}

#[cfg(test)]
mod tests;
