use serde::{Deserialize, Serialize};

/// Dense row-major array of `f64`. Matrices are `[rows, cols]`, with a
/// linear map stored as `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }
}

/// `out = w · x + b` for a `[out, in]` matrix.
pub(crate) fn affine(w: &Tensor, b: &Tensor, x: &[f64], out: &mut [f64]) {
    let n_in = w.cols();
    debug_assert_eq!(x.len(), n_in);
    for (o, y) in out.iter_mut().enumerate() {
        let row = &w.data[o * n_in..(o + 1) * n_in];
        *y = b.data[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Backward of [`affine`]: accumulates weight and bias gradients and adds
/// `wᵀ · dy` into `dx`.
pub(crate) fn affine_back(w: &Tensor, x: &[f64], dy: &[f64], dw: &mut Tensor, db: &mut Tensor, dx: &mut [f64]) {
    let n_in = w.cols();
    for (o, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db.data[o] += g;
        let wrow = &w.data[o * n_in..(o + 1) * n_in];
        let dwrow = &mut dw.data[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            dwrow[i] += g * x[i];
            dx[i] += g * wrow[i];
        }
    }
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    out
}
