//! Trains the small-corpus IE model on a dataset and prints a seeded
//! sample of correctly predicted static texts, the pool that antonym edits
//! are drawn from.
//!
//! ```text
//! cargo run --release --example antonym_candidates -- data/corpus/levels.jsonl 60
//! ```

use qulog::corpus::read_dataset;
use qulog::encoder::ModelConfig;
use qulog::models::{argmax, train, Classifier, Preparer, TaskKind, TaskSpec, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = read_dataset(Path::new(args.first().ok_or("usage: antonym_candidates <dataset> [count]")?))?;
    let count: usize = args.get(1).map(|c| c.parse()).transpose()?.unwrap_or(60);
    let task = TaskSpec::new(TaskKind::LevelIe);
    let prepared = Preparer::default().training_set(&data, &task, None, None)?;
    let cfg = TrainConfig::small_corpus(task.kind);
    let model_cfg = ModelConfig { classes: 2, ..ModelConfig::default() };
    let (model, log) = train(&prepared.samples, &task, &cfg, &model_cfg)?;
    eprintln!("best epoch {}", log.best_epoch);
    let texts: std::collections::HashMap<String, &str> =
        data.samples().iter().map(|s| (s.id(), s.static_text.as_str())).collect();
    let mut correct = Vec::new();
    for s in &prepared.samples {
        if Some(argmax(&model.scores(&s.tokens)?)) == s.label {
            correct.push((texts[&s.id], task.class_names[s.label.unwrap()].as_str()));
        }
    }
    correct.sort();
    correct.dedup();
    eprintln!("{} distinct correct texts", correct.len());
    correct.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7));
    for (text, level) in correct.iter().take(count) {
        println!("{level}\t{text}");
    }
    Ok(())
}
