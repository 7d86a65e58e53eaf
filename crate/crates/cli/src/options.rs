use anyhow::{bail, Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Fills every option left unset on the command line from the other set.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($opt:ident),* } [ $($list:ident),* ]) => {
        impl Merge for $t {
            fn merge(self, file: Self) -> Self {
                Self {
                    $($opt: self.$opt.or(file.$opt),)*
                    $($list: if self.$list.is_empty() { file.$list } else { self.$list },)*
                }
            }
        }
    };
}

pub fn resolve<T: Merge + DeserializeOwned>(flags: T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else { return Ok(flags) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let file: T = serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))?;
    Ok(flags.merge(file))
}

pub fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing required option --{}", name.replace('_', "-")),
    }
}

/// The explicit seed, else `QULOG_SEED`, else 0.
pub fn seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(s) = explicit {
        return Ok(s);
    }
    match std::env::var("QULOG_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("QULOG_SEED={v:?} is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractArgs {
    /// Root of the source tree.
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Languages to extract (java, python).
    #[arg(long = "lang", num_args = 1..)]
    pub lang: Vec<String>,
    /// Output dataset (JSONL).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// System name recorded on every instruction; defaults to the root's
    /// directory name.
    #[arg(long)]
    pub system: Option<String>,
    /// Also write the skip report (JSON) here.
    #[arg(long)]
    pub skips: Option<PathBuf>,
}
merge_fields!(ExtractArgs { root, out, system, skips } [lang]);

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// iwe, ie, iw, we or linguistic.
    #[arg(long)]
    pub task: Option<String>,
    /// Output checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Weight the loss by inverse class frequency.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub class_weighting: Option<bool>,
    /// `default` or `small-corpus` (batch 32, learning rate 1e-3).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub model_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Structure-group labels (JSONL), linguistic task only.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Label for groups missing from `--labels`.
    #[arg(long)]
    pub default_label: Option<String>,
    /// Per-epoch losses as CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}
merge_fields!(TrainArgs {
    data, task, out, seed, epochs, batch_size, lr, patience, validation_fraction, class_weighting, preset,
    model_dim, layers, heads, max_len, labels, default_label, log
} []);

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AssessArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset to assess (JSONL).
    #[arg(long, conflicts_with = "root")]
    pub data: Option<PathBuf>,
    /// Source tree to extract and assess.
    #[arg(long)]
    pub root: Option<PathBuf>,
    #[arg(long = "lang", num_args = 1..)]
    pub lang: Vec<String>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(AssessArgs { model, data, root, labels, out } [lang]);

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Static text of the instruction.
    #[arg(long)]
    pub text: Option<String>,
    /// exact or sampled; by default exact when the text is short enough.
    #[arg(long)]
    pub mode: Option<String>,
    /// Permutations in sampled mode.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Class to explain; defaults to the prediction.
    #[arg(long)]
    pub class: Option<String>,
}
merge_fields!(ExplainArgs { model, text, mode, budget, seed, class } []);

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// N-gram sizes (default 1 to 5).
    #[arg(long, num_args = 1..)]
    pub ngram: Vec<usize>,
    /// Add a contingency table from this level model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Per n-gram entropy values as CSV.
    #[arg(long)]
    pub entropy_csv: Option<PathBuf>,
}
merge_fields!(AnalyzeArgs { data, out, model, entropy_csv } [ngram]);

#[derive(Args, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvalArgs {
    /// Checkpoint whose task and settings are evaluated.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// holdout, leave-one-system-out or repeated-splits.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub default_label: Option<String>,
}
merge_fields!(EvalArgs { model, data, protocol, out, seed, repeats, test_fraction, labels, default_label } []);
