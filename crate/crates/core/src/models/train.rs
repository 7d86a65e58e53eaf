use super::{build_vocabulary, require_classes, PreparedSample, TaskKind, TaskSpec, TrainedModel};
use crate::encoder::{adam_step, encode_input, AdamConfig, AdamState, EncoderModel, ModelConfig};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per gradient chunk. Chunks run in parallel and are summed in
/// order, so results do not depend on the thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub validation_fraction: f64,
    /// Seeds the validation split and the per-epoch shuffles.
    pub seed: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Weight each sample by `n / (classes * n_class)`.
    #[serde(default)]
    pub class_weighting: bool,
}

impl TrainConfig {
    /// Batch 2048 for level tasks, 64 for the linguistic task; 100
    /// epochs, patience 5, 10% validation, Adam at 1e-4 / 0.9 / 0.99.
    pub fn for_task(kind: TaskKind) -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            batch_size: if kind == TaskKind::Linguistic { 64 } else { 2048 },
            max_epochs: 100,
            patience: 5,
            validation_fraction: 0.1,
            seed: 0,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            class_weighting: false,
        }
    }

    /// Settings for corpora of a few thousand instructions, where the
    /// defaults would take one or two optimizer steps per epoch.
    pub fn small_corpus(kind: TaskKind) -> Self {
        TrainConfig { batch_size: 32, lr: 1e-3, ..TrainConfig::for_task(kind) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::invalid("batch_size, max_epochs and patience must be positive"));
        }
        if !(self.validation_fraction >= 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation_fraction must lie in [0, 1)"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when the validation split is empty.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub train_size: usize,
    pub validation_size: usize,
}

impl TrainingLog {
    /// CSV `epoch,train_loss,val_loss`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            let val = e.val_loss.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{val}\n", e.epoch, e.train_loss));
        }
        out
    }

    fn monitored(&self, e: &EpochLog) -> f64 {
        e.val_loss.unwrap_or(e.train_loss)
    }
}

/// Stratified split: each class gives `round(fraction * n_class)` samples
/// to validation, never its last training sample.
fn split(counts: &[usize], labels: &[usize], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        let take = ((fraction * n as f64).round() as usize).min(n.saturating_sub(1));
        val.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Weighted loss sum and gradient over `batch`, reduced in a fixed order.
fn batch_gradients(
    model: &EncoderModel,
    inputs: &[Vec<usize>],
    labels: &[usize],
    weights: &[f64],
    batch: &[usize],
    scale: f64,
) -> Result<(f64, Vec<crate::encoder::Tensor>)> {
    let parts: Vec<Result<(f64, Vec<crate::encoder::Tensor>)>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = model.zero_gradients();
            let mut loss = 0.0;
            for &i in chunk {
                loss += model.accumulate_gradients(&inputs[i], labels[i], weights[labels[i]] * scale, &mut g)?;
            }
            Ok((loss, g))
        })
        .collect();
    let mut total = model.zero_gradients();
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l;
        for (t, s) in total.iter_mut().zip(&g) {
            for (a, b) in t.data.iter_mut().zip(&s.data) {
                *a += b;
            }
        }
    }
    Ok((loss, total))
}

fn mean_loss(model: &EncoderModel, inputs: &[Vec<usize>], labels: &[usize], idx: &[usize]) -> Result<f64> {
    let losses: Vec<Result<f64>> = idx
        .par_iter()
        .map(|&i| {
            let p = model.forward(&inputs[i])?;
            Ok(-p[labels[i]].max(f64::MIN_POSITIVE).ln())
        })
        .collect();
    let mut sum = 0.0;
    for l in losses {
        sum += l?;
    }
    Ok(sum / idx.len() as f64)
}

/// Trains an encoder with Adam and early stopping on validation loss.
///
/// Every sample needs a label below the task's class count and at least two
/// classes must be present. The returned parameters are those of the epoch
/// with the lowest validation loss (training loss when the validation split
/// is empty).
pub fn train(
    samples: &[PreparedSample],
    task: &TaskSpec,
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
) -> Result<(TrainedModel, TrainingLog)> {
    cfg.validate()?;
    if model_cfg.classes != task.classes() {
        return Err(Error::invalid(format!(
            "model has {} classes but {} needs {}",
            model_cfg.classes,
            task.kind,
            task.classes()
        )));
    }
    let counts = require_classes(samples, task)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label.unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut train_idx, val_idx) = split(&counts, &labels, cfg.validation_fraction, &mut rng);

    let train_samples: Vec<PreparedSample> = train_idx.iter().map(|&i| samples[i].clone()).collect();
    let vocab = build_vocabulary(&train_samples)?;
    let inputs: Vec<Vec<usize>> = samples.iter().map(|s| encode_input(&s.tokens, &vocab, model_cfg.max_len)).collect();
    let weights: Vec<f64> = if cfg.class_weighting {
        let train_counts = super::label_counts(&train_samples, task.classes());
        let present = train_counts.iter().filter(|&&c| c > 0).count() as f64;
        train_counts
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { train_idx.len() as f64 / (present * c as f64) })
            .collect()
    } else {
        vec![1.0; task.classes()]
    };

    let mut model = EncoderModel::new(model_cfg.clone(), vocab)?;
    let adam = AdamConfig { lr: cfg.lr, beta1: cfg.beta1, beta2: cfg.beta2, ..AdamConfig::default() };
    let mut state = AdamState::new(&model);
    let mut log = TrainingLog { train_size: train_idx.len(), validation_size: val_idx.len(), ..TrainingLog::default() };
    let mut best: Option<(f64, EncoderModel)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.max_epochs {
        train_idx.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in train_idx.chunks(cfg.batch_size).enumerate() {
            let (loss, grads) = batch_gradients(&model, &inputs, &labels, &weights, batch, 1.0 / batch.len() as f64)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}, batch {}", b + 1)));
            }
            epoch_loss += loss * batch.len() as f64;
            adam_step(&mut model, &grads, &mut state, &adam)?;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_loss = if val_idx.is_empty() { None } else { Some(mean_loss(&model, &inputs, &labels, &val_idx)?) };
        if val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        let entry = EpochLog { epoch, train_loss, val_loss };
        let monitored = log.monitored(&entry);
        log.epochs.push(entry);
        if best.as_ref().is_none_or(|(b, _)| monitored < *b) {
            best = Some((monitored, model.clone()));
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (_, model) = best.expect("at least one epoch ran");
    Ok((TrainedModel { model, task: task.clone(), train_config: Some(cfg.clone()) }, log))
}
