use super::{PreparedSample, TaskKind, TaskSpec, TrainConfig};
use crate::encoder::{encode_input, load_checkpoint, save_checkpoint, EncoderModel};
use crate::error::{Error, Result};
use crate::metrics::{classification_metrics, MetricSuite};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Version of the assessment report layout.
pub const REPORT_VERSION: u32 = 1;

/// Anything that maps a sample's tokens to class scores.
pub trait Classifier: Sync {
    fn task(&self) -> &TaskSpec;

    /// Scores summing to 1, one per class.
    fn scores(&self, tokens: &[String]) -> Result<Vec<f64>>;
}

/// An encoder together with the task it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: EncoderModel,
    pub task: TaskSpec,
    /// Settings the model was trained with, reused by evaluation protocols.
    pub train_config: Option<TrainConfig>,
}

impl TrainedModel {
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        encode_input(tokens, &self.model.vocab, self.model.config.max_len)
    }

    /// Fails unless the model was trained for `kind`.
    pub fn ensure_task(&self, kind: TaskKind) -> Result<()> {
        if self.task.kind != kind {
            return Err(Error::invalid(format!(
                "model was trained for {} ({} classes), not {} ({} classes)",
                self.task.kind,
                self.task.classes(),
                kind,
                TaskSpec::new(kind).classes()
            )));
        }
        Ok(())
    }
}

impl Classifier for TrainedModel {
    fn task(&self) -> &TaskSpec {
        &self.task
    }

    fn scores(&self, tokens: &[String]) -> Result<Vec<f64>> {
        self.model.forward(&self.encode(tokens))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Extra {
    task: TaskSpec,
    #[serde(default)]
    train: Option<TrainConfig>,
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let extra = serde_json::to_value(Extra { task: model.task.clone(), train: model.train_config.clone() })?;
    save_checkpoint(&model.model, &extra, path)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let (model, extra) = load_checkpoint(path)?;
    let extra: Extra = serde_json::from_value(extra)
        .map_err(|e| Error::Checkpoint(format!("task metadata: {e}")))?;
    extra.task.validate()?;
    if extra.task.classes() != model.config.classes {
        return Err(Error::Checkpoint(format!(
            "task {} has {} classes but the network has {}",
            extra.task.kind,
            extra.task.classes(),
            model.config.classes
        )));
    }
    Ok(TrainedModel { model, task: extra.task, train_config: extra.train })
}

/// Index of the largest score, the lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessedSample {
    pub id: String,
    pub predicted: usize,
    pub scores: Vec<f64>,
    pub label: Option<usize>,
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub task: TaskSpec,
    pub samples: Vec<AssessedSample>,
}

/// Scores every sample; order is preserved.
pub fn assess(classifier: &dyn Classifier, samples: &[PreparedSample]) -> Result<Assessment> {
    let task = classifier.task().clone();
    let assessed: Result<Vec<AssessedSample>> = samples
        .par_iter()
        .map(|s| {
            let scores = classifier.scores(&s.tokens)?;
            let predicted = argmax(&scores);
            Ok(AssessedSample {
                id: s.id.clone(),
                predicted,
                label: s.label,
                agree: s.label.map(|l| l == predicted),
                scores,
            })
        })
        .collect();
    Ok(Assessment { task, samples: assessed? })
}

impl Assessment {
    /// Metrics over the labeled samples.
    pub fn metrics(&self) -> Result<MetricSuite> {
        let labeled: Vec<&AssessedSample> = self.samples.iter().filter(|s| s.label.is_some()).collect();
        let labels: Vec<usize> = labeled.iter().map(|s| s.label.unwrap()).collect();
        let preds: Vec<usize> = labeled.iter().map(|s| s.predicted).collect();
        let scores: Vec<Vec<f64>> = labeled.iter().map(|s| s.scores.clone()).collect();
        classification_metrics(&labels, &preds, &scores, self.task.classes())
    }

    /// Report with disagreements first, most confident first (ties by id),
    /// then the remaining samples in input order.
    pub fn report(&self) -> AssessmentReport {
        let mut disagreements: Vec<&AssessedSample> = self.samples.iter().filter(|s| s.agree == Some(false)).collect();
        disagreements.sort_by(|a, b| {
            b.scores[b.predicted].total_cmp(&a.scores[a.predicted]).then_with(|| a.id.cmp(&b.id))
        });
        let rest = self.samples.iter().filter(|s| s.agree != Some(false));
        let name = |c: usize| self.task.class_names[c].clone();
        let row = |s: &AssessedSample| ReportSample {
            id: s.id.clone(),
            predicted: name(s.predicted),
            scores: s.scores.clone(),
            label: s.label.map(name),
            agree: s.agree,
        };
        let labeled = self.samples.iter().filter(|s| s.label.is_some()).count();
        AssessmentReport {
            format_version: REPORT_VERSION,
            task: self.task.kind,
            class_names: self.task.class_names.clone(),
            summary: ReportSummary {
                samples: self.samples.len(),
                labeled,
                agreements: labeled - disagreements.len(),
                disagreements: disagreements.len(),
            },
            disagreements: disagreements.iter().map(|s| row(s)).collect(),
            others: rest.map(row).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSample {
    pub id: String,
    pub predicted: String,
    /// Aligned with the report's `class_names`.
    pub scores: Vec<f64>,
    pub label: Option<String>,
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub samples: usize,
    pub labeled: usize,
    pub agreements: usize,
    pub disagreements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub format_version: u32,
    pub task: TaskKind,
    pub class_names: Vec<String>,
    pub summary: ReportSummary,
    pub disagreements: Vec<ReportSample>,
    /// Agreeing and unlabeled samples.
    pub others: Vec<ReportSample>,
}
