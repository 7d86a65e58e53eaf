//! Tasks, sample preparation, training, assessment and baselines.

mod assess;
mod baseline;
mod protocol;
mod train;

pub use assess::{
    argmax, assess, load_model, save_model, AssessedSample, Assessment, AssessmentReport, Classifier, ReportSample,
    ReportSummary, TrainedModel, REPORT_VERSION,
};
pub use baseline::{train_majority_baseline, train_ngram_baseline, MajorityBaseline, NGramBaseline};
pub use protocol::{evaluate, EvalReport, FoldResult, MeanStd, ModelSummary, Protocol, ProtocolConfig};
pub use train::{train, EpochLog, TrainConfig, TrainingLog};

use crate::corpus::{Dataset, Level, LogInstruction};
use crate::encoder::Vocabulary;
use crate::error::{Error, Result};
use crate::preprocess::{
    apply_group_labels, group_by_structure, pos_tag, tokenize, PosTagger, Quality, Stopwords, StructureLabels,
    VAR_TOKEN,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    LevelIwe,
    LevelIe,
    LevelIw,
    LevelWe,
    Linguistic,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::LevelIwe,
        TaskKind::LevelIe,
        TaskKind::LevelIw,
        TaskKind::LevelWe,
        TaskKind::Linguistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::LevelIwe => "level_iwe",
            TaskKind::LevelIe => "level_ie",
            TaskKind::LevelIw => "level_iw",
            TaskKind::LevelWe => "level_we",
            TaskKind::Linguistic => "linguistic",
        }
    }

    /// Accepts both `ie` and `level_ie` forms.
    pub fn parse(s: &str) -> Option<TaskKind> {
        let short = s.strip_prefix("level_").unwrap_or(s);
        match short {
            "iwe" => Some(TaskKind::LevelIwe),
            "ie" => Some(TaskKind::LevelIe),
            "iw" => Some(TaskKind::LevelIw),
            "we" | "ew" => Some(TaskKind::LevelWe),
            "linguistic" if s == short => Some(TaskKind::Linguistic),
            _ => None,
        }
    }

    /// Levels kept by a level task, in class order.
    pub fn levels(self) -> Option<&'static [Level]> {
        use Level::*;
        match self {
            TaskKind::LevelIwe => Some(&[Info, Warning, Error]),
            TaskKind::LevelIe => Some(&[Info, Error]),
            TaskKind::LevelIw => Some(&[Info, Warning]),
            TaskKind::LevelWe => Some(&[Warning, Error]),
            TaskKind::Linguistic => None,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Word tokens of the static text.
    Tokens,
    /// Part-of-speech tags of the static text.
    Structure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub class_names: Vec<String>,
    pub channel: Channel,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        match kind.levels() {
            Some(levels) => TaskSpec {
                kind,
                class_names: levels.iter().map(|l| l.as_str().to_string()).collect(),
                channel: Channel::Tokens,
            },
            None => TaskSpec {
                kind,
                class_names: vec![Quality::Sufficient.as_str().into(), Quality::Insufficient.as_str().into()],
                channel: Channel::Structure,
            },
        }
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    /// Checks a spec read from disk against the one its kind implies.
    pub fn validate(&self) -> Result<()> {
        if *self != TaskSpec::new(self.kind) {
            return Err(Error::invalid(format!("inconsistent task description for {}", self.kind)));
        }
        Ok(())
    }

    /// Class index of a level, if this level task uses it.
    pub fn level_class(&self, level: Level) -> Option<usize> {
        self.kind.levels()?.iter().position(|&l| l == level)
    }

    pub fn quality_class(&self, quality: Quality) -> Option<usize> {
        (self.kind == TaskKind::Linguistic).then_some(match quality {
            Quality::Sufficient => 0,
            Quality::Insufficient => 1,
        })
    }
}

/// Model-ready record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedSample {
    pub id: String,
    pub system: String,
    pub tokens: Vec<String>,
    pub label: Option<usize>,
}

/// Samples for one task plus the ids left out.
#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub samples: Vec<PreparedSample>,
    /// Level tasks: instructions without a single literal token.
    pub excluded: Vec<String>,
    /// Linguistic task: structure groups that took the default label.
    pub defaulted: Vec<String>,
}

/// Turns instructions into model inputs for a task.
#[derive(Debug, Clone)]
pub struct Preparer {
    pub stopwords: Stopwords,
    pub tagger: PosTagger,
}

impl Default for Preparer {
    fn default() -> Self {
        Preparer { stopwords: Stopwords::bundled(), tagger: PosTagger::builtin() }
    }
}

fn has_literal(tokens: &[String]) -> bool {
    tokens.iter().any(|t| t != VAR_TOKEN)
}

impl Preparer {
    /// Model input for free text (the builtin tagger is needed for the
    /// structure channel).
    pub fn text_tokens(&self, task: &TaskSpec, text: &str) -> Result<Vec<String>> {
        match task.channel {
            Channel::Tokens => Ok(tokenize(text, &self.stopwords)),
            Channel::Structure => Ok(self.tagger.tag_text(text)?.tokens()),
        }
    }

    pub fn instruction_tokens(&self, task: &TaskSpec, instruction: &LogInstruction) -> Result<Vec<String>> {
        match task.channel {
            Channel::Tokens => Ok(tokenize(&instruction.static_text, &self.stopwords)),
            Channel::Structure => Ok(pos_tag(instruction, &self.tagger)?.tokens()),
        }
    }

    /// Labeled samples for training or evaluation.
    ///
    /// Level tasks keep the task's levels and leave out instructions whose
    /// tokens are all variables (nothing to learn from). The linguistic
    /// task labels every instruction through its structure group; `labels`
    /// is required and `default` covers unlabeled groups.
    pub fn training_set(
        &self,
        dataset: &Dataset,
        task: &TaskSpec,
        labels: Option<&StructureLabels>,
        default: Option<Quality>,
    ) -> Result<Prepared> {
        let mut out = Prepared::default();
        if task.kind == TaskKind::Linguistic {
            let labels = labels.ok_or_else(|| Error::invalid("the linguistic task needs structure labels"))?;
            let groups = group_by_structure(dataset, &self.tagger)?;
            let labeled = apply_group_labels(&groups, labels, default)?;
            out.defaulted = labeled.defaulted;
            for s in labeled.samples {
                out.samples.push(PreparedSample {
                    id: s.instruction.id(),
                    system: s.instruction.system.clone(),
                    tokens: s.structure_key.split(' ').filter(|t| !t.is_empty()).map(str::to_ascii_lowercase).collect(),
                    label: task.quality_class(s.quality),
                });
            }
            return Ok(out);
        }
        for s in dataset.samples() {
            let Some(label) = task.level_class(s.level) else { continue };
            let tokens = tokenize(&s.static_text, &self.stopwords);
            if !has_literal(&tokens) {
                out.excluded.push(s.id());
                continue;
            }
            out.samples.push(PreparedSample { id: s.id(), system: s.system.clone(), tokens, label: Some(label) });
        }
        Ok(out)
    }

    /// Every instruction of the dataset, labeled where the label is known.
    pub fn assessment_set(
        &self,
        dataset: &Dataset,
        task: &TaskSpec,
        labels: Option<&StructureLabels>,
    ) -> Result<Vec<PreparedSample>> {
        dataset
            .samples()
            .iter()
            .map(|s| {
                let (tokens, label) = match task.channel {
                    Channel::Tokens => (tokenize(&s.static_text, &self.stopwords), task.level_class(s.level)),
                    Channel::Structure => {
                        let structure = pos_tag(s, &self.tagger)?;
                        let label = labels.and_then(|l| l.get(&structure.key())).and_then(|&q| task.quality_class(q));
                        (structure.tokens(), label)
                    }
                };
                Ok(PreparedSample { id: s.id(), system: s.system.clone(), tokens, label })
            })
            .collect()
    }
}

/// Vocabulary over the training tokens, most frequent first with ties in
/// lexicographic order, after the reserved tokens.
pub fn build_vocabulary(samples: &[PreparedSample]) -> Result<Vocabulary> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot build a vocabulary from an empty training set"));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for s in samples {
        for t in &s.tokens {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    let mut order: Vec<(&str, usize)> = freq.into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(Vocabulary::new(order.into_iter().map(|(t, _)| t)))
}

/// Samples per class index; unlabeled samples are not counted.
pub(crate) fn label_counts(samples: &[PreparedSample], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for s in samples {
        if let Some(l) = s.label {
            counts[l] += 1;
        }
    }
    counts
}

pub(crate) fn require_classes(samples: &[PreparedSample], task: &TaskSpec) -> Result<Vec<usize>> {
    if let Some(s) = samples.iter().find(|s| s.label.is_none_or(|l| l >= task.classes())) {
        return Err(Error::invalid(format!("sample {} has no valid {} label", s.id, task.kind)));
    }
    let counts = label_counts(samples, task.classes());
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::invalid(format!(
            "{} needs at least two classes in the training data, found counts {counts:?}",
            task.kind
        )));
    }
    Ok(counts)
}
