use super::{round_f32, EncoderModel, Gradients, Tensor};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub t: u64,
}

impl AdamState {
    pub fn new(model: &EncoderModel) -> Self {
        AdamState {
            m: model.zero_gradients(),
            v: model.zero_gradients(),
            t: 0,
        }
    }
}

/// Updates `params` in place with bias-corrected Adam:
/// `θ -= lr · m̂ / (sqrt(v̂) + eps)`.
pub(crate) fn adam_update(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::Shape("optimizer state does not match parameters".into()));
    }
    for ((p, g), (m, v)) in params.iter().zip(grads).zip(state.m.iter().zip(&state.v)) {
        if p.shape != g.shape || p.shape != m.shape || p.shape != v.shape {
            return Err(Error::Shape(format!("parameter {:?} vs gradient {:?}", p.shape, g.shape)));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        let (g, m, v) = (&grads[i].data, &mut state.m[i].data, &mut state.v[i].data);
        for j in 0..p.data.len() {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            let step = cfg.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + cfg.eps);
            p.data[j] = round_f32(p.data[j] - step);
        }
    }
    Ok(())
}

pub fn adam_step(model: &mut EncoderModel, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    adam_update(model.params_mut(), grads, state, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> Vec<Tensor> {
        vec![Tensor { shape: vec![1], data: vec![x] }]
    }

    fn state() -> AdamState {
        AdamState { m: scalar(0.0), v: scalar(0.0), t: 0 }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = scalar(0.25);
        let mut s = state();
        adam_update(&mut p, &scalar(0.0), &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p[0].data[0], 0.25);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // At t=1, m̂ = g and v̂ = g², so the step is lr · g / (|g| + eps).
        let cfg = AdamConfig { lr: 1e-2, ..AdamConfig::default() };
        let mut p = scalar(1.0);
        let mut s = state();
        adam_update(&mut p, &scalar(1.0), &mut s, &cfg).unwrap();
        let want = 1.0 - 1e-2 * 1.0 / (1.0 + 1e-8);
        assert!((p[0].data[0] - want).abs() < 1e-7, "{}", p[0].data[0]);
    }

    #[test]
    fn descends_a_quadratic() {
        // loss = (x - 3)², gradient 2(x - 3); steps of at most lr never
        // overshoot the minimum within 200 steps.
        let cfg = AdamConfig { lr: 0.01, ..AdamConfig::default() };
        let mut p = scalar(0.0);
        let mut s = state();
        let mut last = 9.0;
        for _ in 0..200 {
            let x = p[0].data[0];
            adam_update(&mut p, &scalar(2.0 * (x - 3.0)), &mut s, &cfg).unwrap();
            let loss = (p[0].data[0] - 3.0f64).powi(2);
            assert!(loss <= last + 1e-9);
            last = loss;
        }
        assert!(last < 2.0, "{last}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = scalar(0.0);
        let g = vec![Tensor::zeros(&[2])];
        let mut s = state();
        assert!(adam_update(&mut p, &g, &mut s, &AdamConfig::default()).is_err());
    }
}
