//! Trainable heads grafted onto the classifier: fusion weights over the four
//! component scores (fixed scalars or a per-hypothesis perceptron) and a
//! softmax temperature (one learnable scalar or a per-step perceptron over
//! the decoder embedding). Emitted weights always satisfy the pairwise
//! simplex constraints; emitted temperatures are always positive.

use super::ffn::Mat;
use crate::logsum::{sigmoid, softplus};
use crate::rng;
use crate::{CoreError, Result};
use serde::{Deserialize, Serialize};

pub const TAU_EPSILON: f64 = 1e-3;
/// softplus(x) + ε = 1 at this pre-activation; heads start at temperature 1.
pub const TAU_PRE_INIT: f64 = 0.539_832_923_355_145_3;

/// Two-layer perceptron with tanh hidden units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MlpCache {
    x: Vec<f64>,
    h: Vec<f64>,
    pub out: Vec<f64>,
}

impl Mlp {
    pub fn init(in_dim: usize, hidden: usize, out_dim: usize, seed: u64, out_bias: f64) -> Self {
        Self {
            w1: Mat::glorot(hidden, in_dim, rng::mix(seed, 1)),
            b1: vec![0.0; hidden],
            w2: Mat::glorot(out_dim, hidden, rng::mix(seed, 2)),
            b2: vec![out_bias; out_dim],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w1: Mat::zeros(self.w1.rows, self.w1.cols),
            b1: vec![0.0; self.b1.len()],
            w2: Mat::zeros(self.w2.rows, self.w2.cols),
            b2: vec![0.0; self.b2.len()],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.cols
    }

    pub fn forward(&self, x: &[f64]) -> MlpCache {
        let mut a1 = self.w1.matvec(x);
        for (a, b) in a1.iter_mut().zip(&self.b1) {
            *a += b;
        }
        let h: Vec<f64> = a1.into_iter().map(f64::tanh).collect();
        let mut out = self.w2.matvec(&h);
        for (o, b) in out.iter_mut().zip(&self.b2) {
            *o += b;
        }
        MlpCache {
            x: x.to_vec(),
            h,
            out,
        }
    }

    pub fn backward(&self, cache: &MlpCache, d_out: &[f64], grads: &mut Mlp) {
        for (g, d) in grads.b2.iter_mut().zip(d_out) {
            *g += d;
        }
        grads.w2.add_outer(d_out, &cache.h);
        let d_h = self.w2.matvec_transpose(d_out);
        let d_a1: Vec<f64> = d_h
            .iter()
            .zip(&cache.h)
            .map(|(&d, &h)| d * (1.0 - h * h))
            .collect();
        for (g, d) in grads.b1.iter_mut().zip(&d_a1) {
            *g += d;
        }
        grads.w1.add_outer(&d_a1, &cache.x);
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.w1.data, &self.b1, &self.w2.data, &self.b2]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
        ]
    }
}

/// Learnable combination weights. `Fixed` holds two unconstrained scalars
/// mapped through sigmoid; `Ada` maps the four normalized component scores
/// to four logits, softmaxed pairwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FusionHead {
    Off,
    Fixed { thetas: [f64; 2] },
    Ada { mlp: Mlp },
}

pub const FUSION_HIDDEN: usize = 16;

impl FusionHead {
    pub fn init_fixed() -> Self {
        // sigmoid(0) = 0.5: start at even acoustic and language splits
        Self::Fixed { thetas: [0.0, 0.0] }
    }

    pub fn init_ada(seed: u64) -> Self {
        Self::Ada {
            mlp: Mlp::init(4, FUSION_HIDDEN, 4, seed, 0.0),
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, Self::Off)
    }

    /// (λ1..λ4) plus the forward cache Ada mode needs for backprop.
    pub fn lambdas(&self, component_scores: &[f64; 4]) -> Result<([f64; 4], Option<MlpCache>)> {
        match self {
            Self::Off => Err(CoreError::InvalidCall(
                "fusion head is off; no weights to emit".into(),
            )),
            Self::Fixed { thetas } => {
                let l1 = sigmoid(thetas[0]);
                let l3 = sigmoid(thetas[1]);
                Ok(([l1, 1.0 - l1, l3, 1.0 - l3], None))
            }
            Self::Ada { mlp } => {
                let cache = mlp.forward(component_scores);
                let (l1, l2) = pair_softmax(cache.out[0], cache.out[1]);
                let (l3, l4) = pair_softmax(cache.out[2], cache.out[3]);
                Ok(([l1, l2, l3, l4], Some(cache)))
            }
        }
    }
}

fn pair_softmax(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let z = ea + eb;
    (ea / z, eb / z)
}

/// Spec-level operation: emit (λ1..λ4) from a head and the component scores.
pub fn fused_lambda(head: &FusionHead, component_scores: &[f64; 4]) -> Result<[f64; 4]> {
    head.lambdas(component_scores).map(|(l, _)| l)
}

/// Softmax temperature head. `Fixed` is a single learnable scalar; `Ada`
/// maps each step's decoder embedding to its own temperature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TempHead {
    Off,
    Fixed { theta: [f64; 1] },
    Ada { mlp: Mlp },
}

pub const TEMP_HIDDEN: usize = 16;

impl TempHead {
    pub fn init_fixed() -> Self {
        Self::Fixed {
            theta: [TAU_PRE_INIT],
        }
    }

    pub fn init_ada(embed_dim: usize, seed: u64) -> Self {
        Self::Ada {
            mlp: Mlp::init(embed_dim, TEMP_HIDDEN, 1, seed, TAU_PRE_INIT),
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, Self::Off)
    }

    /// τ for one step: softplus(pre-activation) + ε, always positive.
    pub fn tau(&self, decfeat: &[f64]) -> Result<(f64, Option<MlpCache>)> {
        match self {
            Self::Off => Ok((1.0, None)),
            Self::Fixed { theta } => Ok((softplus(theta[0]) + TAU_EPSILON, None)),
            Self::Ada { mlp } => {
                if decfeat.len() != mlp.in_dim() {
                    return Err(CoreError::SpecMismatch(format!(
                        "temperature head expects {}-dim decoder embedding, got {}",
                        mlp.in_dim(),
                        decfeat.len()
                    )));
                }
                let cache = mlp.forward(decfeat);
                let tau = softplus(cache.out[0]) + TAU_EPSILON;
                Ok((tau, Some(cache)))
            }
        }
    }
}

/// Spec-level operation: per-step temperature from a decoder embedding.
pub fn adaptive_temperature(head: &TempHead, decfeat: &[f64]) -> Result<f64> {
    if head.is_off() {
        return Err(CoreError::InvalidCall(
            "temperature head is off; no temperature to emit".into(),
        ));
    }
    head.tau(decfeat).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_fusion_at_zero_is_even() {
        let head = FusionHead::init_fixed();
        let l = fused_lambda(&head, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(l, [0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn ada_fusion_zero_weights_is_even() {
        let head = FusionHead::Ada {
            mlp: Mlp::init(4, FUSION_HIDDEN, 4, 3, 0.0).zeros_like(),
        };
        let l = fused_lambda(&head, &[-1.0, 2.0, 0.5, 0.0]).unwrap();
        assert_eq!(l, [0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn lambda_constraints_hold_for_random_heads() {
        for seed in 0..50u64 {
            let head = FusionHead::init_ada(seed);
            let comp = [
                -2.0 + seed as f64 * 0.1,
                -1.0,
                -3.0 + (seed % 7) as f64,
                -0.5,
            ];
            let l = fused_lambda(&head, &comp).unwrap();
            assert!((l[0] + l[1] - 1.0).abs() <= 1e-12);
            assert!((l[2] + l[3] - 1.0).abs() <= 1e-12);
            assert!(l.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn off_head_is_invalid_call() {
        assert!(matches!(
            fused_lambda(&FusionHead::Off, &[0.0; 4]),
            Err(CoreError::InvalidCall(_))
        ));
    }

    #[test]
    fn temperature_zero_head_is_softplus_zero() {
        let head = TempHead::Ada {
            mlp: Mlp::init(4, TEMP_HIDDEN, 1, 5, 0.0).zeros_like(),
        };
        let tau = adaptive_temperature(&head, &[1.0, -2.0, 0.0, 3.0]).unwrap();
        assert!((tau - (std::f64::consts::LN_2 + TAU_EPSILON)).abs() < 1e-12);
    }

    #[test]
    fn temperature_always_positive() {
        let head = TempHead::init_ada(6, 11);
        for scale in [-100.0, -1.0, 0.0, 1.0, 100.0] {
            let x = vec![scale; 6];
            assert!(adaptive_temperature(&head, &x).unwrap() > 0.0);
        }
    }

    #[test]
    fn temperature_init_is_unit() {
        let head = TempHead::init_fixed();
        let tau = adaptive_temperature(&head, &[]).unwrap();
        assert!((tau - 1.0).abs() < 1e-12, "tau {tau}");
    }

    #[test]
    fn temperature_dim_mismatch() {
        let head = TempHead::init_ada(4, 2);
        assert!(matches!(
            adaptive_temperature(&head, &[0.0; 3]),
            Err(CoreError::SpecMismatch(_))
        ));
    }

    #[test]
    fn seeded_head_matches_manual_forward() {
        let mlp = Mlp::init(3, 2, 1, 77, TAU_PRE_INIT);
        let head = TempHead::Ada { mlp: mlp.clone() };
        let x = [0.2, -0.4, 1.1];
        // manual: tanh hidden, linear out, softplus + eps
        let mut h = Vec::new();
        for i in 0..2 {
            let mut a = mlp.b1[i];
            for j in 0..3 {
                a += mlp.w1.data[i * 3 + j] * x[j];
            }
            h.push(a.tanh());
        }
        let pre = mlp.b2[0] + mlp.w2.data[0] * h[0] + mlp.w2.data[1] * h[1];
        let manual = softplus(pre) + TAU_EPSILON;
        let got = adaptive_temperature(&head, &x).unwrap();
        assert!((got - manual).abs() < 1e-15);
    }
}
