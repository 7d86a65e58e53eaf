//! A small transformer encoder classifier with hand-written backpropagation.
//!
//! Inputs are `[LMT] t1 t2 ... [PD] [PD]`; the final embedding of the
//! `[LMT]` position goes through a linear head and a softmax. `[PD]`
//! positions are dropped before the first layer, so padding has no effect
//! on the output at all.
//!
//! Arithmetic is `f64`. Parameters are rounded to the nearest `f32` after
//! initialization and after every optimizer step, which makes the `f32`
//! checkpoint format lossless.

mod adam;
mod checkpoint;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION};
pub use tensor::{softmax, Tensor};

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use tensor::{affine, affine_back, softmax_in_place};

pub const LMT: usize = 0;
pub const PD: usize = 1;
pub const UNK: usize = 2;
pub const RESERVED: [&str; 3] = ["[LMT]", "[PD]", "[UNK]"];

/// Token-to-index map with the three reserved tokens at 0, 1 and 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from ordinary tokens in the given order. Repeats
    /// and reserved names are skipped.
    pub fn new<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        let mut v = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in RESERVED.iter().copied().map(String::from).chain(tokens.into_iter().map(|t| t.as_ref().to_string())) {
            if !v.index.contains_key(&t) {
                v.index.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    /// Rebuilds from a full token list as stored in a checkpoint.
    pub fn from_list(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 3 || tokens[..3] != RESERVED {
            return Err(Error::Checkpoint("vocabulary must start with [LMT] [PD] [UNK]".into()));
        }
        let v = Vocabulary::new(&tokens[3..]);
        if v.tokens.len() != tokens.len() {
            return Err(Error::Checkpoint("vocabulary has duplicate tokens".into()));
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Maps tokens to `[LMT] + indices`, unknown tokens to `[UNK]`, then pads
/// with `[PD]` or truncates to exactly `max_len`.
pub fn encode_input<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(max_len);
    out.push(LMT);
    out.extend(
        tokens
            .iter()
            .take(max_len.saturating_sub(1))
            .map(|t| vocab.get(t.as_ref()).unwrap_or(UNK)),
    );
    out.resize(max_len, PD);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub max_len: usize,
    pub model_dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub classes: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            max_len: 50,
            model_dim: 16,
            heads: 2,
            layers: 2,
            classes: 3,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(format!("model config: {m}")));
        if self.max_len < 2 {
            return fail("max_len must be at least 2");
        }
        if self.model_dim == 0 || self.heads == 0 || self.layers == 0 {
            return fail("model_dim, heads and layers must be positive");
        }
        if self.model_dim % self.heads != 0 {
            return fail("model_dim must be divisible by heads");
        }
        if !(2..=3).contains(&self.classes) {
            return fail("classes must be 2 or 3");
        }
        Ok(())
    }

    pub fn ffn_dim(&self) -> usize {
        4 * self.model_dim
    }
}

/// Parameters per encoder layer, in storage order.
const LAYER_PARAMS: [&str; 16] = [
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b",
];
const WQ: usize = 0;
const BQ: usize = 1;
const WK: usize = 2;
const BK: usize = 3;
const WV: usize = 4;
const BV: usize = 5;
const WO: usize = 6;
const BO: usize = 7;
const LN1G: usize = 8;
const LN1B: usize = 9;
const W1: usize = 10;
const B1: usize = 11;
const W2: usize = 12;
const B2: usize = 13;
const LN2G: usize = 14;
const LN2B: usize = 15;

const TOK: usize = 0;
const POS: usize = 1;

const LN_EPS: f64 = 1e-5;

/// Names and shapes of every parameter tensor, in storage order.
pub fn parameter_layout(cfg: &ModelConfig, vocab_size: usize) -> Vec<(String, Vec<usize>)> {
    let d = cfg.model_dim;
    let f = cfg.ffn_dim();
    let mut out = vec![
        ("tok_emb".to_string(), vec![vocab_size, d]),
        ("pos_emb".to_string(), vec![cfg.max_len, d]),
    ];
    for l in 0..cfg.layers {
        for name in LAYER_PARAMS {
            let shape = match name {
                "wq" | "wk" | "wv" | "wo" => vec![d, d],
                "w1" => vec![f, d],
                "w2" => vec![d, f],
                "b1" => vec![f],
                _ => vec![d],
            };
            out.push((format!("layers.{l}.{name}"), shape));
        }
    }
    out.push(("head.w".to_string(), vec![cfg.classes, d]));
    out.push(("head.b".to_string(), vec![cfg.classes]));
    out
}

/// One tensor per parameter, matching [`EncoderModel::params`].
pub type Gradients = Vec<Tensor>;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    params: Vec<Tensor>,
}

pub(crate) fn round_f32(x: f64) -> f64 {
    x as f32 as f64
}

impl EncoderModel {
    /// Fresh model. Weight matrices are drawn from U(-1/sqrt(fan_in),
    /// 1/sqrt(fan_in)), embeddings from U(-1, 1); biases start at 0 and
    /// layer-norm gains at 1.
    pub fn new(config: ModelConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Vec::new();
        for (name, shape) in parameter_layout(&config, vocab.len()) {
            let mut t = Tensor::zeros(&shape);
            let short = name.rsplit('.').next().unwrap();
            let bound = if name.ends_with("_emb") {
                Some(1.0)
            } else if shape.len() == 2 {
                Some(1.0 / (shape[1] as f64).sqrt())
            } else {
                None
            };
            match bound {
                Some(a) => t.data.iter_mut().for_each(|x| *x = round_f32(rng.gen_range(-a..a))),
                None if short.ends_with("_g") => t.fill(1.0),
                None => {}
            }
            params.push(t);
        }
        Ok(EncoderModel { config, vocab, params })
    }

    pub(crate) fn from_parts(config: ModelConfig, vocab: Vocabulary, params: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let layout = parameter_layout(&config, vocab.len());
        if layout.len() != params.len() {
            return Err(Error::Shape(format!("expected {} tensors, got {}", layout.len(), params.len())));
        }
        for ((name, shape), t) in layout.iter().zip(&params) {
            if *shape != t.shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Shape(format!("{name}: expected {shape:?}, got {:?}", t.shape)));
            }
            if !t.is_finite() {
                return Err(Error::NonFinite(name.clone()));
            }
        }
        Ok(EncoderModel { config, vocab, params })
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Direct parameter access for fixtures and surgery. Values must stay
    /// finite and shapes unchanged.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn param_names(&self) -> Vec<String> {
        parameter_layout(&self.config, self.vocab.len()).into_iter().map(|(n, _)| n).collect()
    }

    pub fn zero_gradients(&self) -> Gradients {
        self.params.iter().map(|t| Tensor::zeros(&t.shape)).collect()
    }

    /// Token embedding row.
    pub fn token_embedding(&self, index: usize) -> &[f64] {
        self.params[TOK].row(index)
    }

    /// Positional embedding row.
    pub fn position_embedding(&self, position: usize) -> &[f64] {
        self.params[POS].row(position)
    }

    fn layer(&self, l: usize, k: usize) -> &Tensor {
        &self.params[2 + l * LAYER_PARAMS.len() + k]
    }

    fn head_index(&self) -> usize {
        2 + self.config.layers * LAYER_PARAMS.len()
    }

    fn check_input(&self, indices: &[usize]) -> Result<()> {
        if indices.len() != self.config.max_len {
            return Err(Error::Shape(format!(
                "input length {} != max_len {}",
                indices.len(),
                self.config.max_len
            )));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.vocab.len()) {
            return Err(Error::Shape(format!("token index {bad} outside vocabulary of {}", self.vocab.len())));
        }
        Ok(())
    }

    /// Output logits before the softmax.
    pub fn logits(&self, indices: &[usize]) -> Result<Vec<f64>> {
        self.check_input(indices)?;
        Ok(self.run(indices, false)?.logits)
    }

    /// Class scores: softmax of the logits, summing to 1.
    pub fn forward(&self, indices: &[usize]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(indices)?))
    }

    /// Gradients of the cross-entropy loss for `target`.
    pub fn backward(&self, indices: &[usize], target: usize) -> Result<Gradients> {
        let mut g = self.zero_gradients();
        self.accumulate_gradients(indices, target, 1.0, &mut g)?;
        Ok(g)
    }

    /// Adds `weight ×` the loss gradient into `grads` and returns the
    /// weighted loss.
    pub fn accumulate_gradients(&self, indices: &[usize], target: usize, weight: f64, grads: &mut Gradients) -> Result<f64> {
        self.check_input(indices)?;
        if target >= self.config.classes {
            return Err(Error::invalid(format!("target class {target} >= {}", self.config.classes)));
        }
        if grads.len() != self.params.len() {
            return Err(Error::Shape("gradient buffer does not match parameters".into()));
        }
        let run = self.run(indices, true)?;
        let probs = softmax(&run.logits);
        let loss = -weight * probs[target].max(f64::MIN_POSITIVE).ln();
        let dz: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(c, &p)| weight * (p - if c == target { 1.0 } else { 0.0 }))
            .collect();
        self.backprop(&run, &dz, grads);
        Ok(loss)
    }

    fn run(&self, indices: &[usize], keep: bool) -> Result<Run> {
        let d = self.config.model_dim;
        let positions: Vec<usize> = (0..indices.len()).filter(|&p| indices[p] != PD).collect();
        let n = positions.len();
        let mut x = vec![0.0; n * d];
        for (r, &p) in positions.iter().enumerate() {
            let te = self.params[TOK].row(indices[p]);
            let pe = self.params[POS].row(p);
            for k in 0..d {
                x[r * d + k] = te[k] + pe[k];
            }
        }
        let mut caches = Vec::with_capacity(self.config.layers);
        for l in 0..self.config.layers {
            let (out, cache) = self.layer_forward(l, &x, n);
            if !out.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("encoder layer {l}")));
            }
            x = out;
            if keep {
                caches.push(cache);
            }
        }
        let h = self.head_index();
        let mut logits = vec![0.0; self.config.classes];
        affine(&self.params[h], &self.params[h + 1], &x[..d], &mut logits);
        if !logits.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("output head".into()));
        }
        Ok(Run {
            indices: indices.to_vec(),
            positions,
            caches,
            last: x,
            logits,
        })
    }

    fn layer_forward(&self, l: usize, x: &[f64], n: usize) -> (Vec<f64>, LayerCache) {
        let d = self.config.model_dim;
        let f = self.config.ffn_dim();
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let p = |k| self.layer(l, k);

        let mut q = vec![0.0; n * d];
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        for r in 0..n {
            let xr = &x[r * d..(r + 1) * d];
            affine(p(WQ), p(BQ), xr, &mut q[r * d..(r + 1) * d]);
            affine(p(WK), p(BK), xr, &mut k[r * d..(r + 1) * d]);
            affine(p(WV), p(BV), xr, &mut v[r * d..(r + 1) * d]);
        }
        let mut attn = vec![0.0; heads * n * n];
        let mut ctx = vec![0.0; n * d];
        for h in 0..heads {
            let o = h * dh;
            for i in 0..n {
                let row = &mut attn[(h * n + i) * n..(h * n + i + 1) * n];
                for j in 0..n {
                    row[j] = scale * (0..dh).map(|e| q[i * d + o + e] * k[j * d + o + e]).sum::<f64>();
                }
                softmax_in_place(row);
                for j in 0..n {
                    let a = row[j];
                    for e in 0..dh {
                        ctx[i * d + o + e] += a * v[j * d + o + e];
                    }
                }
            }
        }
        let mut r1 = vec![0.0; n * d];
        for r in 0..n {
            affine(p(WO), p(BO), &ctx[r * d..(r + 1) * d], &mut r1[r * d..(r + 1) * d]);
            for e in 0..d {
                r1[r * d + e] += x[r * d + e];
            }
        }
        let ln1 = layer_norm(&r1, n, d, p(LN1G), p(LN1B));
        let mut pre = vec![0.0; n * f];
        let mut act = vec![0.0; n * f];
        let mut r2 = vec![0.0; n * d];
        for r in 0..n {
            let y1 = &ln1.y[r * d..(r + 1) * d];
            affine(p(W1), p(B1), y1, &mut pre[r * f..(r + 1) * f]);
            for e in 0..f {
                act[r * f + e] = gelu(pre[r * f + e]);
            }
            affine(p(W2), p(B2), &act[r * f..(r + 1) * f], &mut r2[r * d..(r + 1) * d]);
            for e in 0..d {
                r2[r * d + e] += y1[e];
            }
        }
        let ln2 = layer_norm(&r2, n, d, p(LN2G), p(LN2B));
        let out = ln2.y.clone();
        (
            out,
            LayerCache {
                x: x.to_vec(),
                q,
                k,
                v,
                attn,
                ctx,
                ln1,
                pre,
                act,
                ln2,
            },
        )
    }

    fn backprop(&self, run: &Run, dz: &[f64], grads: &mut Gradients) {
        let d = self.config.model_dim;
        let n = run.positions.len();
        let h = self.head_index();
        let mut dx = vec![0.0; n * d];
        {
            let (lo, hi) = grads.split_at_mut(h + 1);
            affine_back(&self.params[h], &run.last[..d], dz, &mut lo[h], &mut hi[0], &mut dx[..d]);
        }
        for l in (0..self.config.layers).rev() {
            dx = self.layer_backward(l, &run.caches[l], &dx, n, grads);
        }
        for (r, &p) in run.positions.iter().enumerate() {
            let tok = run.indices[p];
            let g = &dx[r * d..(r + 1) * d];
            for (a, b) in grads[TOK].row_mut(tok).iter_mut().zip(g) {
                *a += b;
            }
            for (a, b) in grads[POS].row_mut(p).iter_mut().zip(g) {
                *a += b;
            }
        }
    }

    fn layer_backward(&self, l: usize, c: &LayerCache, dout: &[f64], n: usize, grads: &mut Gradients) -> Vec<f64> {
        let d = self.config.model_dim;
        let f = self.config.ffn_dim();
        let heads = self.config.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let base = 2 + l * LAYER_PARAMS.len();
        let p = |k: usize| &self.params[base + k];
        // Distinct parameter slots of this layer, borrowed mutably together.
        let g = &mut grads[base..base + LAYER_PARAMS.len()];

        let mut dr2 = vec![0.0; n * d];
        layer_norm_back(&c.ln2, dout, n, d, p(LN2G), g, LN2G, LN2B, &mut dr2);

        let mut dy1 = dr2.clone();
        for r in 0..n {
            let mut dact = vec![0.0; f];
            {
                let (a, b) = g.split_at_mut(B2);
                affine_back(p(W2), &c.act[r * f..(r + 1) * f], &dr2[r * d..(r + 1) * d], &mut a[W2], &mut b[0], &mut dact);
            }
            let mut dpre = vec![0.0; f];
            for e in 0..f {
                dpre[e] = dact[e] * gelu_grad(c.pre[r * f + e]);
            }
            let (a, b) = g.split_at_mut(B1);
            affine_back(p(W1), &c.ln1.y[r * d..(r + 1) * d], &dpre, &mut a[W1], &mut b[0], &mut dy1[r * d..(r + 1) * d]);
        }

        let mut dr1 = vec![0.0; n * d];
        layer_norm_back(&c.ln1, &dy1, n, d, p(LN1G), g, LN1G, LN1B, &mut dr1);

        let mut dx = dr1.clone();
        let mut dctx = vec![0.0; n * d];
        for r in 0..n {
            let (a, b) = g.split_at_mut(BO);
            affine_back(p(WO), &c.ctx[r * d..(r + 1) * d], &dr1[r * d..(r + 1) * d], &mut a[WO], &mut b[0], &mut dctx[r * d..(r + 1) * d]);
        }

        let mut dq = vec![0.0; n * d];
        let mut dk = vec![0.0; n * d];
        let mut dv = vec![0.0; n * d];
        let mut da = vec![0.0; n];
        for hh in 0..heads {
            let o = hh * dh;
            for i in 0..n {
                let a = &c.attn[(hh * n + i) * n..(hh * n + i + 1) * n];
                for j in 0..n {
                    da[j] = (0..dh).map(|e| dctx[i * d + o + e] * c.v[j * d + o + e]).sum();
                    for e in 0..dh {
                        dv[j * d + o + e] += a[j] * dctx[i * d + o + e];
                    }
                }
                let dot: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
                for j in 0..n {
                    let ds = a[j] * (da[j] - dot) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for e in 0..dh {
                        dq[i * d + o + e] += ds * c.k[j * d + o + e];
                        dk[j * d + o + e] += ds * c.q[i * d + o + e];
                    }
                }
            }
        }
        for r in 0..n {
            let xr = &c.x[r * d..(r + 1) * d];
            let dxr = &mut dx[r * d..(r + 1) * d];
            for (w, b, src) in [(WQ, BQ, &dq), (WK, BK, &dk), (WV, BV, &dv)] {
                let (lo, hi) = g.split_at_mut(b);
                affine_back(p(w), xr, &src[r * d..(r + 1) * d], &mut lo[w], &mut hi[0], dxr);
            }
        }
        dx
    }
}

struct LayerCache {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    attn: Vec<f64>,
    ctx: Vec<f64>,
    ln1: NormCache,
    pre: Vec<f64>,
    act: Vec<f64>,
    ln2: NormCache,
}

struct Run {
    indices: Vec<usize>,
    positions: Vec<usize>,
    caches: Vec<LayerCache>,
    last: Vec<f64>,
    logits: Vec<f64>,
}

struct NormCache {
    xhat: Vec<f64>,
    rstd: Vec<f64>,
    y: Vec<f64>,
}

fn layer_norm(x: &[f64], n: usize, d: usize, gain: &Tensor, bias: &Tensor) -> NormCache {
    let mut xhat = vec![0.0; n * d];
    let mut rstd = vec![0.0; n];
    let mut y = vec![0.0; n * d];
    for r in 0..n {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = s;
        for e in 0..d {
            let h = (row[e] - mean) * s;
            xhat[r * d + e] = h;
            y[r * d + e] = gain.data[e] * h + bias.data[e];
        }
    }
    NormCache { xhat, rstd, y }
}

#[allow(clippy::too_many_arguments)]
fn layer_norm_back(
    c: &NormCache,
    dy: &[f64],
    n: usize,
    d: usize,
    gain: &Tensor,
    g: &mut [Tensor],
    gi: usize,
    bi: usize,
    dx: &mut [f64],
) {
    let mut dxhat = vec![0.0; d];
    for r in 0..n {
        for e in 0..d {
            let dyv = dy[r * d + e];
            g[gi].data[e] += dyv * c.xhat[r * d + e];
            g[bi].data[e] += dyv;
            dxhat[e] = dyv * gain.data[e];
        }
        let mean_d = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dx = (0..d).map(|e| dxhat[e] * c.xhat[r * d + e]).sum::<f64>() / d as f64;
        for e in 0..d {
            dx[r * d + e] = c.rstd[r] * (dxhat[e] - mean_d - c.xhat[r * d + e] * mean_dx);
        }
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

#[cfg(test)]
mod tests;
