use super::{
    assess, require_classes, train, train_majority_baseline, train_ngram_baseline, PreparedSample, TaskKind, TaskSpec,
    TrainConfig,
};
use crate::encoder::ModelConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricSuite;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Version of the evaluation report layout.
pub const EVAL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// One stratified random split.
    Holdout,
    /// Train on all systems but one, test on that one; one fold per system.
    LeaveOneSystemOut,
    /// Stratified random splits repeated with derived seeds.
    RepeatedSplits,
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Protocol> {
        match s {
            "holdout" => Some(Protocol::Holdout),
            "leave-one-system-out" => Some(Protocol::LeaveOneSystemOut),
            "repeated-splits" => Some(Protocol::RepeatedSplits),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Holdout => "holdout",
            Protocol::LeaveOneSystemOut => "leave-one-system-out",
            Protocol::RepeatedSplits => "repeated-splits",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    /// Number of splits for repeated splits.
    pub repeats: usize,
    /// Test share for the random-split protocols.
    pub test_fraction: f64,
    pub seed: u64,
    /// Smoothing of the n-gram baseline.
    pub alpha: f64,
}

impl ProtocolConfig {
    pub fn new(protocol: Protocol) -> Self {
        ProtocolConfig { protocol, repeats: 30, test_fraction: 0.2, seed: 0, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub name: String,
    pub train_size: usize,
    pub test_size: usize,
    pub best_epoch: usize,
    pub encoder: MetricSuite,
    pub ngram: MetricSuite,
    pub majority: MetricSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single fold.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auc: MeanStd,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specificity: Option<MeanStd>,
}

impl ModelSummary {
    fn of(suites: &[&MetricSuite]) -> ModelSummary {
        let col = |f: fn(&MetricSuite) -> f64| MeanStd::of(&suites.iter().map(|s| f(s)).collect::<Vec<_>>());
        let spec: Option<Vec<f64>> = suites.iter().map(|s| s.specificity).collect();
        ModelSummary {
            accuracy: col(|s| s.accuracy),
            precision: col(|s| s.precision),
            recall: col(|s| s.recall),
            f1: col(|s| s.f1),
            auc: col(|s| s.auc),
            specificity: spec.map(|v| MeanStd::of(&v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub task: TaskKind,
    pub protocol: Protocol,
    pub class_names: Vec<String>,
    pub train_config: TrainConfig,
    pub model_config: ModelConfig,
    pub folds: Vec<FoldResult>,
    pub encoder: ModelSummary,
    pub ngram: ModelSummary,
    pub majority: ModelSummary,
}

/// Stratified random split of sample indices into (train, test).
fn random_split(samples: &[PreparedSample], classes: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label == Some(c)).collect();
        idx.shuffle(&mut rng);
        let take = ((fraction * idx.len() as f64).round() as usize).min(idx.len().saturating_sub(1));
        test.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn pick(samples: &[PreparedSample], idx: &[usize]) -> Vec<PreparedSample> {
    idx.iter().map(|&i| samples[i].clone()).collect()
}

fn run_fold(
    name: String,
    train_set: Vec<PreparedSample>,
    test_set: Vec<PreparedSample>,
    task: &TaskSpec,
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    alpha: f64,
) -> Result<FoldResult> {
    if test_set.is_empty() {
        return Err(Error::invalid(format!("fold {name} has an empty test set")));
    }
    let (model, log) = train(&train_set, task, train_cfg, model_cfg)?;
    let ngram = train_ngram_baseline(&train_set, task, alpha)?;
    let majority = train_majority_baseline(&train_set, task)?;
    Ok(FoldResult {
        name,
        train_size: train_set.len(),
        test_size: test_set.len(),
        best_epoch: log.best_epoch,
        encoder: assess(&model, &test_set)?.metrics()?,
        ngram: assess(&ngram, &test_set)?.metrics()?,
        majority: assess(&majority, &test_set)?.metrics()?,
    })
}

/// Trains and tests the encoder and both baselines on every fold of the
/// protocol. Folds run in parallel; results are in fold order.
pub fn evaluate(
    samples: &[PreparedSample],
    task: &TaskSpec,
    train_cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    protocol: &ProtocolConfig,
) -> Result<EvalReport> {
    require_classes(samples, task)?;
    let folds: Vec<(String, Vec<PreparedSample>, Vec<PreparedSample>)> = match protocol.protocol {
        Protocol::Holdout | Protocol::RepeatedSplits => {
            if !(protocol.test_fraction > 0.0 && protocol.test_fraction < 1.0) {
                return Err(Error::invalid("test_fraction must lie in (0, 1)"));
            }
            let repeats = if protocol.protocol == Protocol::Holdout { 1 } else { protocol.repeats };
            if repeats == 0 {
                return Err(Error::invalid("repeats must be at least 1"));
            }
            (0..repeats)
                .map(|r| {
                    let seed = protocol.seed.wrapping_add(r as u64);
                    let (tr, te) = random_split(samples, task.classes(), protocol.test_fraction, seed);
                    (format!("split-{r}"), pick(samples, &tr), pick(samples, &te))
                })
                .collect()
        }
        Protocol::LeaveOneSystemOut => {
            let systems: BTreeSet<&str> = samples.iter().map(|s| s.system.as_str()).collect();
            if systems.len() < 2 {
                return Err(Error::invalid("leave-one-system-out needs at least two systems"));
            }
            systems
                .into_iter()
                .map(|sys| {
                    let (te, tr): (Vec<_>, Vec<_>) = samples.iter().cloned().partition(|s| s.system == sys);
                    (sys.to_string(), tr, te)
                })
                .collect()
        }
    };
    let results: Result<Vec<FoldResult>> = folds
        .into_par_iter()
        .map(|(name, tr, te)| run_fold(name, tr, te, task, train_cfg, model_cfg, protocol.alpha))
        .collect();
    let folds = results?;
    let summary = |f: fn(&FoldResult) -> &MetricSuite| ModelSummary::of(&folds.iter().map(f).collect::<Vec<_>>());
    Ok(EvalReport {
        format_version: EVAL_VERSION,
        task: task.kind,
        protocol: protocol.protocol,
        class_names: task.class_names.clone(),
        train_config: train_cfg.clone(),
        model_config: model_cfg.clone(),
        encoder: summary(|f| &f.encoder),
        ngram: summary(|f| &f.ngram),
        majority: summary(|f| &f.majority),
        folds,
    })
}
