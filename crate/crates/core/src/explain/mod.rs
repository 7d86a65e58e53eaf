//! Shapley-value token importance for encoder predictions.
//!
//! Players are the non-pad input tokens. A coalition is scored by the
//! softmax score of the explained class with every absent token replaced
//! by `[PD]`. Since pad positions are dropped before the first layer, the
//! baseline is the input with the token removed entirely.
//!
//! Each token's Shapley value is spread over the embedding dimensions in
//! proportion to the magnitude of the input vector it contributes (token
//! plus position embedding), which preserves the per-token total.

use crate::encoder::{EncoderModel, LMT, PD};
use crate::error::{Error, Result};
use crate::models::{argmax, Preparer, TrainedModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest token count for exact enumeration (4096 coalitions).
pub const MAX_EXACT_TOKENS: usize = 12;
/// Permutations drawn in sampled mode unless told otherwise.
pub const DEFAULT_BUDGET: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "exact" => Some(Mode::Exact),
            "sampled" => Some(Mode::Sampled),
            _ => None,
        }
    }
}

/// Exact Shapley values of an `n`-player game. `value` receives the
/// coalition as a membership mask.
pub fn exact_shapley(n: usize, value: impl Fn(&[bool]) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    if n > MAX_EXACT_TOKENS {
        return Err(Error::TooManyPlayers { max: MAX_EXACT_TOKENS, got: n });
    }
    let masks = 1usize << n;
    let v: Vec<f64> = (0..masks)
        .into_par_iter()
        .map(|m| value(&(0..n).map(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    // weight[s] = s! (n - s - 1)! / n!
    let mut weight = vec![0.0; n.max(1)];
    for (s, w) in weight.iter_mut().enumerate().take(n) {
        let mut x = 1.0 / n as f64;
        for k in 1..=s {
            x *= k as f64 / (n - k) as f64;
        }
        *w = x;
    }
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1 << i;
        for m in (0..masks).filter(|m| m & bit == 0) {
            *p += weight[(m as u32).count_ones() as usize] * (v[m | bit] - v[m]);
        }
    }
    Ok(phi)
}

/// Monte-Carlo Shapley values: the mean marginal contribution over
/// `budget` uniformly random player orders drawn from `seed`.
pub fn sampled_shapley(
    n: usize,
    budget: usize,
    seed: u64,
    value: impl Fn(&[bool]) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    if budget == 0 {
        return Err(Error::invalid("sampling budget must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders: Vec<Vec<usize>> = (0..budget)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    let empty = value(&vec![false; n])?;
    let contributions: Vec<Vec<f64>> = orders
        .par_iter()
        .map(|order| {
            let mut mask = vec![false; n];
            let mut prev = empty;
            let mut c = vec![0.0; n];
            for &i in order {
                mask[i] = true;
                let now = value(&mask)?;
                c[i] = now - prev;
                prev = now;
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let mut phi = vec![0.0; n];
    for c in &contributions {
        phi.iter_mut().zip(c).for_each(|(p, x)| *p += x);
    }
    phi.iter_mut().for_each(|p| *p /= budget as f64);
    Ok(phi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAttribution {
    pub class: usize,
    pub mode: Mode,
    /// Input positions of the players, ascending.
    pub positions: Vec<usize>,
    /// Per player, one value per embedding dimension.
    pub values: Vec<Vec<f64>>,
    /// Per player, the Shapley value before the dimension split.
    pub totals: Vec<f64>,
    /// Score of the explained class on the full input.
    pub full: f64,
    /// Score with every player replaced by `[PD]`.
    pub baseline: f64,
    pub value_function: String,
}

/// Shapley attribution of the score of `class` to the input tokens.
///
/// `indices` is an encoded input (`[LMT]` first). Exact mode allows at
/// most [`MAX_EXACT_TOKENS`] players.
pub fn shapley_values(
    model: &EncoderModel,
    indices: &[usize],
    class: usize,
    mode: Mode,
    budget: usize,
    seed: u64,
) -> Result<ShapleyAttribution> {
    if class >= model.config.classes {
        return Err(Error::invalid(format!("class {class} >= {}", model.config.classes)));
    }
    let positions: Vec<usize> = (0..indices.len()).filter(|&p| indices[p] != PD && indices[p] != LMT).collect();
    let n = positions.len();
    let value = |mask: &[bool]| -> Result<f64> {
        let mut x = indices.to_vec();
        for (k, &p) in positions.iter().enumerate() {
            if !mask[k] {
                x[p] = PD;
            }
        }
        Ok(model.forward(&x)?[class])
    };
    let full = value(&vec![true; n])?;
    let baseline = value(&vec![false; n])?;
    let totals = match mode {
        Mode::Exact => exact_shapley(n, value)?,
        Mode::Sampled => sampled_shapley(n, budget, seed, value)?,
    };
    let d = model.config.model_dim;
    let values = positions
        .iter()
        .zip(&totals)
        .map(|(&p, &phi)| {
            let delta: Vec<f64> = model
                .token_embedding(indices[p])
                .iter()
                .zip(model.position_embedding(p))
                .map(|(t, q)| (t + q).abs())
                .collect();
            let sum: f64 = delta.iter().sum();
            if sum > 0.0 {
                delta.iter().map(|w| phi * w / sum).collect()
            } else {
                vec![phi / d as f64; d]
            }
        })
        .collect();
    Ok(ShapleyAttribution {
        class,
        mode,
        positions,
        values,
        totals,
        full,
        baseline,
        value_function: format!("softmax score of class {class}; absent tokens replaced by [PD]"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

/// Squared Euclidean norm of a token's Shapley vector.
pub fn intensity(s: &[f64]) -> f64 {
    s.iter().map(|x| x * x).sum()
}

/// Sign of the component with the largest magnitude, the first one on
/// ties; a zero vector counts as positive.
pub fn sign(s: &[f64]) -> Sign {
    let mut best = 0.0f64;
    let mut value = 0.0;
    for &x in s {
        if x.abs() > best {
            best = x.abs();
            value = x;
        }
    }
    if value < 0.0 {
        Sign::Negative
    } else {
        Sign::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenImportance {
    pub token: String,
    pub intensity: f64,
    pub sign: Sign,
    /// 1 for the most important token.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub class: String,
    pub mode: Mode,
    /// By intensity, highest first; ties keep input order.
    pub tokens: Vec<TokenImportance>,
}

impl Explanation {
    /// 1-based rank of the first occurrence of `token`.
    pub fn rank_of(&self, token: &str) -> Option<usize> {
        self.tokens.iter().find(|t| t.token == token).map(|t| t.rank)
    }
}

/// Aggregates an attribution into ranked token scores. `tokens` names the
/// players in input order.
pub fn importance_scores(attr: &ShapleyAttribution, tokens: &[String], class_name: &str) -> Result<Explanation> {
    if tokens.len() != attr.values.len() {
        return Err(Error::invalid(format!("{} tokens for {} attributed players", tokens.len(), attr.values.len())));
    }
    let mut scored: Vec<(usize, f64, Sign)> =
        attr.values.iter().enumerate().map(|(i, s)| (i, intensity(s), sign(s))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(Explanation {
        class: class_name.to_string(),
        mode: attr.mode,
        tokens: scored
            .into_iter()
            .enumerate()
            .map(|(r, (i, intensity, sign))| TokenImportance { token: tokens[i].clone(), intensity, sign, rank: r + 1 })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainOptions {
    /// `None` picks exact mode when the token count allows it.
    pub mode: Option<Mode>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions { mode: None, budget: DEFAULT_BUDGET, seed: 0 }
    }
}

/// Explains the model's score for `class` (default: its prediction) on a
/// static text. Tokens past the model's input length are not players.
pub fn explain_prediction(
    model: &TrainedModel,
    preparer: &Preparer,
    text: &str,
    class: Option<usize>,
    opts: &ExplainOptions,
) -> Result<Explanation> {
    let mut tokens = preparer.text_tokens(&model.task, text)?;
    tokens.truncate(model.model.config.max_len - 1);
    if tokens.is_empty() {
        return Err(Error::NothingToExplain);
    }
    let indices = model.encode(&tokens);
    let class = match class {
        Some(c) => c,
        None => argmax(&model.model.forward(&indices)?),
    };
    let mode = opts
        .mode
        .unwrap_or(if tokens.len() <= MAX_EXACT_TOKENS { Mode::Exact } else { Mode::Sampled });
    let attr = shapley_values(&model.model, &indices, class, mode, opts.budget, opts.seed)?;
    let name = model.task.class_names.get(class).cloned().unwrap_or_else(|| class.to_string());
    importance_scores(&attr, &tokens, &name)
}

#[cfg(test)]
mod tests;
