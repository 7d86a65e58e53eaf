//! Labels every structure group of a dataset with the heuristic rule and
//! prints the labels as JSONL.
//!
//! ```text
//! cargo run --example heuristic_labels -- data/corpus/levels.jsonl
//! ```

use qulog::corpus::read_dataset;
use qulog::preprocess::{group_by_structure, heuristic_quality, labels_to_jsonl, pos_tag, PosTagger, StructureLabels};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).ok_or("usage: heuristic_labels <dataset.jsonl>")?;
    let dataset = read_dataset(Path::new(&path))?;
    let tagger = PosTagger::builtin();
    let mut labels = StructureLabels::new();
    for (key, members) in group_by_structure(&dataset, &tagger)? {
        labels.insert(key, heuristic_quality(&pos_tag(&members[0], &tagger)?));
    }
    print!("{}", labels_to_jsonl(&labels));
    Ok(())
}
