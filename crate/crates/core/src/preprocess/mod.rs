//! From log instructions to model inputs: level unification, word
//! tokenization and part-of-speech structures.

mod groups;
mod level;
mod pos;
mod tokenize;

pub use groups::{
    apply_group_labels, group_by_structure, heuristic_quality, labels_to_jsonl, read_labels, read_labels_path,
    LabelRecord, LabeledDataset, LabeledInstruction, Quality, StructureGroups, StructureLabels, MIN_WORDS,
};
pub use level::unify_level;
pub use pos::{pos_tag, pos_words, LinguisticStructure, PosTagger, Tag};
pub use tokenize::{tokenize, Stopwords, VAR_TOKEN};
