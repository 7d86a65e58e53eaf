//! Leave-one-system-out evaluation of a level task on a dataset.
//!
//! ```text
//! cargo run --release --example loso -- <dataset.jsonl> [task] [key=value...]
//! ```
//!
//! Keys: batch, lr, epochs, patience, d, layers, heads, max_len, seed, weight.

use qulog::corpus::read_dataset;
use qulog::encoder::ModelConfig;
use qulog::models::{evaluate, Preparer, Protocol, ProtocolConfig, TaskKind, TaskSpec, TrainConfig};
use std::path::Path;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = read_dataset(Path::new(args.first().ok_or("usage: loso <dataset> [task] [k=v...]")?))?;
    let kind = args.get(1).and_then(|t| TaskKind::parse(t)).unwrap_or(TaskKind::LevelIe);
    let task = TaskSpec::new(kind);
    let mut train = TrainConfig::for_task(kind);
    let mut model = ModelConfig { classes: task.classes(), ..ModelConfig::default() };
    for kv in args.iter().skip(2) {
        let (k, v) = kv.split_once('=').ok_or("expected key=value")?;
        match k {
            "batch" => train.batch_size = v.parse()?,
            "lr" => train.lr = v.parse()?,
            "epochs" => train.max_epochs = v.parse()?,
            "patience" => train.patience = v.parse()?,
            "weight" => train.class_weighting = v.parse()?,
            "seed" => {
                train.seed = v.parse()?;
                model.seed = train.seed;
            }
            "d" => model.model_dim = v.parse()?,
            "layers" => model.layers = v.parse()?,
            "heads" => model.heads = v.parse()?,
            "max_len" => model.max_len = v.parse()?,
            _ => return Err(format!("unknown key {k}").into()),
        }
    }
    let prepared = Preparer::default().training_set(&data, &task, None, None)?;
    eprintln!("{} samples, {} excluded", prepared.samples.len(), prepared.excluded.len());
    let start = Instant::now();
    let report = evaluate(&prepared.samples, &task, &train, &model, &ProtocolConfig::new(Protocol::LeaveOneSystemOut))?;
    for f in &report.folds {
        println!(
            "{:<14} n={:<5} epoch={:<3} enc f1={:.3} auc={:.3} | ngram f1={:.3} | majority f1={:.3}",
            f.name, f.test_size, f.best_epoch, f.encoder.f1, f.encoder.auc, f.ngram.f1, f.majority.f1
        );
    }
    println!(
        "mean enc {:.3}±{:.3} ngram {:.3} majority {:.3} ({:.1}s)",
        report.encoder.f1.mean,
        report.encoder.f1.std,
        report.ngram.f1.mean,
        report.majority.f1.mean,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
