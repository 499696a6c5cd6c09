//! Dense matrices and the residual feed-forward classifier body: three
//! hidden ReLU layers with identity skip connections between the
//! equal-width ones, a single output logit clamped at ±30, then sigmoid.

use crate::logsum::sigmoid;
use crate::rng;
use serde::{Deserialize, Serialize};

pub const LOGIT_CLAMP: f64 = 30.0;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Seeded uniform init in ±sqrt(6/(fan_in+fan_out)).
    pub fn glorot(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            data: rng::glorot_uniform(seed, rows, cols),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum());
        }
        out
    }

    /// Wᵀ y.
    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * y[r];
            }
        }
        out
    }

    /// self += y xᵀ (gradient accumulation).
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, v) in row.iter_mut().zip(x) {
                *w += y[r] * v;
            }
        }
    }
}

/// Residual FFN: d -> h (ReLU), two h -> h ReLU blocks with identity skips,
/// h -> 1 logit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualFfn {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
    pub w3: Mat,
    pub b3: Vec<f64>,
    pub w4: Mat,
    pub b4: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FfnCache {
    pub x: Vec<f64>,
    a1: Vec<f64>,
    h1: Vec<f64>,
    a2: Vec<f64>,
    h2: Vec<f64>,
    a3: Vec<f64>,
    h3: Vec<f64>,
    logit_raw: f64,
    pub probability: f64,
}

impl ResidualFfn {
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w1: Mat::glorot(hidden_dim, input_dim, rng::mix(seed, 1)),
            b1: vec![0.0; hidden_dim],
            w2: Mat::glorot(hidden_dim, hidden_dim, rng::mix(seed, 2)),
            b2: vec![0.0; hidden_dim],
            w3: Mat::glorot(hidden_dim, hidden_dim, rng::mix(seed, 3)),
            b3: vec![0.0; hidden_dim],
            w4: Mat::glorot(1, hidden_dim, rng::mix(seed, 4)),
            b4: vec![0.0],
        }
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w1: Mat::zeros(hidden_dim, input_dim),
            b1: vec![0.0; hidden_dim],
            w2: Mat::zeros(hidden_dim, hidden_dim),
            b2: vec![0.0; hidden_dim],
            w3: Mat::zeros(hidden_dim, hidden_dim),
            b3: vec![0.0; hidden_dim],
            w4: Mat::zeros(1, hidden_dim),
            b4: vec![0.0],
        }
    }

    pub fn forward(&self, x: &[f64]) -> FfnCache {
        let mut a1 = self.w1.matvec(x);
        for (a, b) in a1.iter_mut().zip(&self.b1) {
            *a += b;
        }
        let h1: Vec<f64> = a1.iter().map(|&a| a.max(0.0)).collect();

        let mut a2 = self.w2.matvec(&h1);
        for (a, b) in a2.iter_mut().zip(&self.b2) {
            *a += b;
        }
        let h2: Vec<f64> = a2
            .iter()
            .zip(&h1)
            .map(|(&a, &skip)| a.max(0.0) + skip)
            .collect();

        let mut a3 = self.w3.matvec(&h2);
        for (a, b) in a3.iter_mut().zip(&self.b3) {
            *a += b;
        }
        let h3: Vec<f64> = a3
            .iter()
            .zip(&h2)
            .map(|(&a, &skip)| a.max(0.0) + skip)
            .collect();

        let logit_raw = self.w4.matvec(&h3)[0] + self.b4[0];
        let logit = logit_raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        FfnCache {
            x: x.to_vec(),
            a1,
            h1,
            a2,
            h2,
            a3,
            h3,
            logit_raw,
            probability: sigmoid(logit),
        }
    }

    /// Backprop dL/dp into parameter grads; returns dL/dx.
    pub fn backward(&self, cache: &FfnCache, d_p: f64, grads: &mut ResidualFfn) -> Vec<f64> {
        let p = cache.probability;
        let mut d_logit = d_p * p * (1.0 - p);
        if cache.logit_raw.abs() > LOGIT_CLAMP {
            d_logit = 0.0;
        }

        grads.b4[0] += d_logit;
        let d_logit_vec = [d_logit];
        grads.w4.add_outer(&d_logit_vec, &cache.h3);
        let d_h3 = self.w4.matvec_transpose(&d_logit_vec);

        // h3 = relu(a3) + h2
        let d_a3: Vec<f64> = d_h3
            .iter()
            .zip(&cache.a3)
            .map(|(&d, &a)| if a > 0.0 { d } else { 0.0 })
            .collect();
        for (g, d) in grads.b3.iter_mut().zip(&d_a3) {
            *g += d;
        }
        grads.w3.add_outer(&d_a3, &cache.h2);
        let mut d_h2 = self.w3.matvec_transpose(&d_a3);
        for (d, skip) in d_h2.iter_mut().zip(&d_h3) {
            *d += skip;
        }

        // h2 = relu(a2) + h1
        let d_a2: Vec<f64> = d_h2
            .iter()
            .zip(&cache.a2)
            .map(|(&d, &a)| if a > 0.0 { d } else { 0.0 })
            .collect();
        for (g, d) in grads.b2.iter_mut().zip(&d_a2) {
            *g += d;
        }
        grads.w2.add_outer(&d_a2, &cache.h1);
        let mut d_h1 = self.w2.matvec_transpose(&d_a2);
        for (d, skip) in d_h1.iter_mut().zip(&d_h2) {
            *d += skip;
        }

        // h1 = relu(a1)
        let d_a1: Vec<f64> = d_h1
            .iter()
            .zip(&cache.a1)
            .map(|(&d, &a)| if a > 0.0 { d } else { 0.0 })
            .collect();
        for (g, d) in grads.b1.iter_mut().zip(&d_a1) {
            *g += d;
        }
        grads.w1.add_outer(&d_a1, &cache.x);
        self.w1.matvec_transpose(&d_a1)
    }

    pub fn param_slices(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("ffn.w1", &self.w1.data),
            ("ffn.b1", &self.b1),
            ("ffn.w2", &self.w2.data),
            ("ffn.b2", &self.b2),
            ("ffn.w3", &self.w3.data),
            ("ffn.b3", &self.b3),
            ("ffn.w4", &self.w4.data),
            ("ffn.b4", &self.b4),
        ]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
            &mut self.w3.data,
            &mut self.b3,
            &mut self.w4.data,
            &mut self.b4,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_output_is_sigmoid_bias() {
        let mut ffn = ResidualFfn::zeros(3, 8);
        ffn.b4[0] = 0.7;
        let cache = ffn.forward(&[1.0, -2.0, 0.5]);
        assert!((cache.probability - sigmoid(0.7)).abs() < 1e-15);
    }

    #[test]
    fn output_strictly_in_unit_interval() {
        let ffn = ResidualFfn::init(4, 16, 99);
        for x in [
            vec![0.0; 4],
            vec![1e6, -1e6, 3.0, -7.0],
            vec![-1e9, 1e9, 1e9, -1e9],
        ] {
            let p = ffn.forward(&x).probability;
            assert!(p > 0.0 && p < 1.0, "p = {p}");
        }
    }

    #[test]
    fn forward_deterministic() {
        let ffn = ResidualFfn::init(5, 16, 7);
        let x = vec![0.3, -0.1, 2.0, 0.0, -4.0];
        assert_eq!(
            ffn.forward(&x).probability.to_bits(),
            ffn.forward(&x).probability.to_bits()
        );
    }
}
