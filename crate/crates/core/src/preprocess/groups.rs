use super::pos::{pos_tag, LinguisticStructure, PosTagger};
use crate::corpus::{Dataset, LogInstruction};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

/// Linguistic quality of a static text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quality {
    Sufficient,
    Insufficient,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Sufficient => "sufficient",
            Quality::Insufficient => "insufficient",
        }
    }

    pub fn parse(s: &str) -> Option<Quality> {
        match s {
            "sufficient" => Some(Quality::Sufficient),
            "insufficient" => Some(Quality::Insufficient),
            _ => None,
        }
    }
}

/// Instructions grouped by the key of their tag sequence.
pub type StructureGroups = BTreeMap<String, Vec<LogInstruction>>;

pub fn group_by_structure(dataset: &Dataset, tagger: &PosTagger) -> Result<StructureGroups> {
    let mut groups = StructureGroups::new();
    for s in dataset.samples() {
        let key = pos_tag(s, tagger)?.key();
        groups.entry(key).or_default().push(s.clone());
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    pub structure_key: String,
    pub label: Quality,
}

pub type StructureLabels = BTreeMap<String, Quality>;

pub fn read_labels(reader: impl BufRead) -> Result<StructureLabels> {
    let mut labels = StructureLabels::new();
    let mut index = 0;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Schema { index, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let r: LabelRecord = serde_json::from_str(&line).map_err(|e| Error::Schema { index, reason: e.to_string() })?;
        labels.insert(r.structure_key, r.label);
        index += 1;
    }
    Ok(labels)
}

pub fn read_labels_path(path: &Path) -> Result<StructureLabels> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(std::io::BufReader::new(file))
}

pub fn labels_to_jsonl(labels: &StructureLabels) -> String {
    labels
        .iter()
        .map(|(k, &label)| {
            let rec = LabelRecord { structure_key: k.clone(), label };
            serde_json::to_string(&rec).expect("label serializes") + "\n"
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInstruction {
    pub instruction: LogInstruction,
    pub structure_key: String,
    pub quality: Quality,
}

#[derive(Debug, Clone, Default)]
pub struct LabeledDataset {
    /// In dataset order.
    pub samples: Vec<LabeledInstruction>,
    /// Group keys that had no label and took the default.
    pub defaulted: Vec<String>,
}

/// Propagates each group's label to its members.
///
/// Groups missing from `labels` take `default` when given; without a
/// default they are an error listing every missing key.
pub fn apply_group_labels(
    groups: &StructureGroups,
    labels: &StructureLabels,
    default: Option<Quality>,
) -> Result<LabeledDataset> {
    let missing: Vec<String> = groups.keys().filter(|k| !labels.contains_key(*k)).cloned().collect();
    let default = match default {
        Some(d) => d,
        None if missing.is_empty() => Quality::Sufficient,
        None => return Err(Error::MissingLabels(missing)),
    };
    let mut samples: Vec<LabeledInstruction> = groups
        .iter()
        .flat_map(|(key, members)| {
            let quality = labels.get(key).copied().unwrap_or(default);
            members.iter().map(move |m| LabeledInstruction {
                instruction: m.clone(),
                structure_key: key.clone(),
                quality,
            })
        })
        .collect();
    samples.sort_by(|a, b| {
        let (a, b) = (&a.instruction, &b.instruction);
        (&a.system, &a.file_path, a.line).cmp(&(&b.system, &b.file_path, b.line))
    });
    Ok(LabeledDataset { samples, defaulted: missing })
}

/// Minimum number of word tags for the heuristic annotation rule.
pub const MIN_WORDS: usize = 4;

/// Heuristic stand-in for human group annotation: a structure is
/// insufficient when it has fewer than [`MIN_WORDS`] word tags
/// (punctuation, symbols and placeholders do not count). Short groups such
/// as `VERB NOUN` or `NOUN VERB PART PUNCT` fall below the bar.
pub fn heuristic_quality(structure: &LinguisticStructure) -> Quality {
    if structure.tags.iter().filter(|t| t.is_word()).count() < MIN_WORDS {
        Quality::Insufficient
    } else {
        Quality::Sufficient
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Level;
    use crate::preprocess::Tag;

    fn instr(line: usize, text: &str) -> LogInstruction {
        LogInstruction {
            system: "s".into(),
            file_path: "f.py".into(),
            line,
            raw: format!("log.info({text:?})"),
            static_text: text.into(),
            level: Level::Info,
            variable_count: text.matches("{}").count(),
        }
    }

    fn fixture() -> Dataset {
        Dataset::new(vec![
            instr(1, "connection refused"),
            instr(2, "server started"),
            instr(3, "disk failed"),
            instr(4, "Failed to open file {}"),
            instr(5, "Failed to read file {}"),
            instr(6, "{}"),
        ])
    }

    #[test]
    fn six_instructions_three_structures() {
        let groups = group_by_structure(&fixture(), &PosTagger::builtin()).unwrap();
        let mut sizes: Vec<usize> = groups.values().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, [3, 2, 1]);
        assert!(groups.contains_key("NOUN VERB"));
        assert!(groups.contains_key("PLACEHOLDER"));
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), 6);
    }

    #[test]
    fn identical_text_same_group() {
        let d = Dataset::new(vec![instr(1, "cache miss for {}"), instr(9, "cache miss for {}")]);
        assert_eq!(group_by_structure(&d, &PosTagger::builtin()).unwrap().len(), 1);
    }

    #[test]
    fn label_propagation_and_defaults() {
        let groups = group_by_structure(&fixture(), &PosTagger::builtin()).unwrap();
        let mut labels = StructureLabels::new();
        labels.insert("NOUN VERB".into(), Quality::Insufficient);
        let err = apply_group_labels(&groups, &labels, None).unwrap_err();
        match err {
            Error::MissingLabels(keys) => assert_eq!(keys.len(), 2),
            e => panic!("{e:?}"),
        }
        let out = apply_group_labels(&groups, &labels, Some(Quality::Sufficient)).unwrap();
        assert_eq!(out.defaulted.len(), 2);
        assert_eq!(out.samples.len(), 6);
        let lines: Vec<usize> = out.samples.iter().map(|s| s.instruction.line).collect();
        assert_eq!(lines, [1, 2, 3, 4, 5, 6]);
        for s in &out.samples {
            let want = if s.structure_key == "NOUN VERB" { Quality::Insufficient } else { Quality::Sufficient };
            assert_eq!(s.quality, want);
        }
        let empty = apply_group_labels(&StructureGroups::new(), &labels, None).unwrap();
        assert!(empty.samples.is_empty());
    }

    #[test]
    fn labels_round_trip() {
        let mut labels = StructureLabels::new();
        labels.insert("VERB NOUN".into(), Quality::Insufficient);
        labels.insert("VERB ADP DET NOUN".into(), Quality::Sufficient);
        let text = labels_to_jsonl(&labels);
        assert_eq!(read_labels(text.as_bytes()).unwrap(), labels);
        assert!(read_labels(r#"{"structure_key":"X","label":"meh"}"#.as_bytes()).is_err());
    }

    #[test]
    fn heuristic_rule() {
        let s = |tags: &[Tag]| LinguisticStructure { tags: tags.to_vec() };
        use Tag::*;
        assert_eq!(heuristic_quality(&s(&[Verb, Noun])), Quality::Insufficient);
        assert_eq!(heuristic_quality(&s(&[Noun, Verb, Part, Punct])), Quality::Insufficient);
        assert_eq!(heuristic_quality(&s(&[Placeholder])), Quality::Insufficient);
        assert_eq!(
            heuristic_quality(&s(&[Noun, Verb, Part, Adp, Noun, Punct, Placeholder])),
            Quality::Sufficient
        );
    }
}
