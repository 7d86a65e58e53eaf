use crate::options::{
    required, seed, AnalyzeArgs, AssessArgs, EvalArgs, ExplainArgs, ExtractArgs, TrainArgs,
};
use anyhow::{anyhow, bail, Context, Result};
use qulog::analysis::{analyze as analyze_corpus, contingency, entropy_csv};
use qulog::corpus::{extract_tree, read_dataset, write_dataset, Dataset, ExtractionGrammar, SkipReport};
use qulog::encoder::ModelConfig;
use qulog::explain::{explain_prediction, ExplainOptions, Explanation, Mode, DEFAULT_BUDGET};
use qulog::models::{
    assess as assess_samples, evaluate, load_model, save_model, train as train_model, Classifier, Preparer, Protocol,
    ProtocolConfig, TaskKind, TaskSpec, TrainConfig, TrainedModel,
};
use qulog::preprocess::{read_labels_path, Quality, Stopwords, StructureLabels};
use serde::Serialize;
use std::path::{Path, PathBuf};

const FORMAT_VERSION: u32 = 1;

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn grammars(langs: &[String]) -> Result<Vec<ExtractionGrammar>> {
    if langs.is_empty() {
        bail!("missing required option --lang");
    }
    langs
        .iter()
        .map(|l| ExtractionGrammar::bundled(l).ok_or_else(|| anyhow!("unsupported language `{l}` (java, python)")))
        .collect()
}

fn system_name(root: &Path) -> String {
    root.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "system".into())
}

fn parse_task(name: &str) -> Result<TaskKind> {
    TaskKind::parse(name).ok_or_else(|| anyhow!("unknown task `{name}` (iwe, ie, iw, we, linguistic)"))
}

fn parse_quality(name: Option<&str>) -> Result<Option<Quality>> {
    name.map(|n| Quality::parse(n).ok_or_else(|| anyhow!("unknown label `{n}` (sufficient, insufficient)")))
        .transpose()
}

fn read_labels(path: Option<&PathBuf>) -> Result<Option<StructureLabels>> {
    path.map(|p| read_labels_path(p).with_context(|| format!("reading labels {}", p.display()))).transpose()
}

fn load(path: &Path) -> Result<TrainedModel> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

fn read(path: &Path) -> Result<Dataset> {
    read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

#[derive(Serialize)]
struct SkipSummary<'a> {
    format_version: u32,
    instructions: usize,
    #[serde(flatten)]
    skips: &'a SkipReport,
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    let root = required(a.root, "root")?;
    let out = required(a.out, "out")?;
    let grammars = grammars(&a.lang)?;
    let system = a.system.unwrap_or_else(|| system_name(&root));
    let ex = extract_tree(&root, &grammars, &system)?;
    write_dataset(&ex.dataset, &out)?;
    let summary = SkipSummary { format_version: FORMAT_VERSION, instructions: ex.dataset.len(), skips: &ex.skips };
    if let Some(path) = &a.skips {
        write_json(path, &summary)?;
    }
    eprintln!(
        "{} instructions; skipped {} calls and {} files",
        ex.dataset.len(),
        ex.skips.skipped_calls(),
        ex.skips.files.len()
    );
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    let data = required(a.data, "data")?;
    let kind = parse_task(&required(a.task, "task")?)?;
    let out = required(a.out, "out")?;
    let default = parse_quality(a.default_label.as_deref())?;
    let seed = seed(a.seed)?;
    let mut cfg = match a.preset.as_deref() {
        None | Some("default") => TrainConfig::for_task(kind),
        Some("small-corpus") => TrainConfig::small_corpus(kind),
        Some(p) => bail!("unknown preset `{p}` (default, small-corpus)"),
    };
    cfg.seed = seed;
    cfg.max_epochs = a.epochs.unwrap_or(cfg.max_epochs);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.lr = a.lr.unwrap_or(cfg.lr);
    cfg.patience = a.patience.unwrap_or(cfg.patience);
    cfg.validation_fraction = a.validation_fraction.unwrap_or(cfg.validation_fraction);
    cfg.class_weighting = a.class_weighting.unwrap_or(cfg.class_weighting);
    cfg.validate()?;
    let task = TaskSpec::new(kind);
    let base = ModelConfig::default();
    let model_cfg = ModelConfig {
        max_len: a.max_len.unwrap_or(base.max_len),
        model_dim: a.model_dim.unwrap_or(base.model_dim),
        heads: a.heads.unwrap_or(base.heads),
        layers: a.layers.unwrap_or(base.layers),
        classes: task.classes(),
        seed,
    };
    model_cfg.validate()?;
    let labels = read_labels(a.labels.as_ref())?;
    let dataset = read(&data)?;
    let prepared = Preparer::default().training_set(&dataset, &task, labels.as_ref(), default)?;
    let (model, log) = train_model(&prepared.samples, &task, &cfg, &model_cfg)?;
    save_model(&model, &out)?;
    if let Some(path) = &a.log {
        write_text(path, &log.to_csv())?;
    }
    eprintln!(
        "trained {} on {} samples ({} validation, {} excluded, {} defaulted groups); best epoch {} of {}",
        kind,
        log.train_size,
        log.validation_size,
        prepared.excluded.len(),
        prepared.defaulted.len(),
        log.best_epoch,
        log.epochs.len()
    );
    Ok(())
}

pub fn assess(a: AssessArgs) -> Result<()> {
    let model = load(&required(a.model, "model")?)?;
    let out = required(a.out, "out")?;
    let dataset = match (&a.data, &a.root) {
        (Some(data), None) => read(data)?,
        (None, Some(root)) => extract_tree(root, &grammars(&a.lang)?, &system_name(root))?.dataset,
        _ => bail!("give exactly one of --data and --root"),
    };
    let labels = read_labels(a.labels.as_ref())?;
    let samples = Preparer::default().assessment_set(&dataset, model.task(), labels.as_ref())?;
    let report = assess_samples(&model, &samples)?.report();
    write_json(&out, &report)?;
    eprintln!(
        "{} instructions, {} disagreements out of {} labeled",
        report.summary.samples, report.summary.disagreements, report.summary.labeled
    );
    Ok(())
}

#[derive(Serialize)]
struct ExplainReport {
    format_version: u32,
    task: TaskKind,
    text: String,
    #[serde(flatten)]
    explanation: Explanation,
}

pub fn explain(a: ExplainArgs) -> Result<()> {
    let model = load(&required(a.model, "model")?)?;
    let text = required(a.text, "text")?;
    let mode = a
        .mode
        .as_deref()
        .map(|m| Mode::parse(m).ok_or_else(|| anyhow!("unknown mode `{m}` (exact, sampled)")))
        .transpose()?;
    let class = a
        .class
        .as_deref()
        .map(|c| {
            model.task.class_names.iter().position(|n| n == c).ok_or_else(|| {
                anyhow!("unknown class `{c}` for {} ({})", model.task.kind, model.task.class_names.join(", "))
            })
        })
        .transpose()?;
    let opts = ExplainOptions { mode, budget: a.budget.unwrap_or(DEFAULT_BUDGET), seed: seed(a.seed)? };
    let explanation = explain_prediction(&model, &Preparer::default(), &text, class, &opts)?;
    let report = ExplainReport { format_version: FORMAT_VERSION, task: model.task.kind, text, explanation };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let dataset = read(&required(a.data, "data")?)?;
    let out = required(a.out, "out")?;
    let ns = if a.ngram.is_empty() { vec![1, 2, 3, 4, 5] } else { a.ngram };
    let stopwords = Stopwords::bundled();
    let (mut report, dist) = analyze_corpus(&dataset, &stopwords, &ns)?;
    if let Some(path) = &a.model {
        let model = load(path)?;
        if model.task.kind == TaskKind::Linguistic {
            bail!("the contingency table needs a level model, got {}", model.task.kind);
        }
        let mut samples = Preparer::default().assessment_set(&dataset, model.task(), None)?;
        samples.retain(|s| s.label.is_some());
        report.contingency = Some(contingency(&assess_samples(&model, &samples)?)?);
    }
    write_json(&out, &report)?;
    if let Some(path) = &a.entropy_csv {
        write_text(path, &entropy_csv(&dist))?;
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let model = load(&required(a.model, "model")?)?;
    let data = required(a.data, "data")?;
    let name = required(a.protocol, "protocol")?;
    let out = required(a.out, "out")?;
    let protocol = Protocol::parse(&name)
        .ok_or_else(|| anyhow!("unknown protocol `{name}` (holdout, leave-one-system-out, repeated-splits)"))?;
    let default = parse_quality(a.default_label.as_deref())?;
    let mut pc = ProtocolConfig::new(protocol);
    pc.seed = seed(a.seed)?;
    pc.repeats = a.repeats.unwrap_or(pc.repeats);
    pc.test_fraction = a.test_fraction.unwrap_or(pc.test_fraction);
    let task = model.task.clone();
    let train_cfg = model.train_config.clone().unwrap_or_else(|| TrainConfig::for_task(task.kind));
    let labels = read_labels(a.labels.as_ref())?;
    let dataset = read(&data)?;
    let prepared = Preparer::default().training_set(&dataset, &task, labels.as_ref(), default)?;
    let report = evaluate(&prepared.samples, &task, &train_cfg, &model.model.config, &pc)?;
    write_json(&out, &report)?;
    eprintln!(
        "{} folds; encoder F1 {:.3} ± {:.3}, n-gram {:.3}, majority {:.3}",
        report.folds.len(),
        report.encoder.f1.mean,
        report.encoder.f1.std,
        report.ngram.f1.mean,
        report.majority.f1.mean
    );
    Ok(())
}
