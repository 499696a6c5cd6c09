//! External language models fused into decoding: an add-k smoothed bigram
//! and a small recurrent scorer with fixed seeded weights.

use super::vocab::TokenId;
use crate::logsum::log_softmax;
use crate::rng::{self, tags};
use crate::{CoreError, Result};

/// Bigram LM with add-k smoothing. Row `vocab_size` of the count table is the
/// start-of-sequence context.
#[derive(Clone, Debug)]
pub struct BigramLm {
    vocab_size: usize,
    k: f64,
    counts: Vec<Vec<f64>>,
    row_sums: Vec<f64>,
}

impl BigramLm {
    pub fn new(vocab_size: usize, k: f64, counts: Vec<Vec<f64>>) -> Result<Self> {
        if k <= 0.0 || !k.is_finite() {
            return Err(CoreError::InvalidInput("smoothing k must be > 0".into()));
        }
        if counts.len() != vocab_size + 1 || counts.iter().any(|r| r.len() != vocab_size) {
            return Err(CoreError::InvalidInput(format!(
                "count table must be {} x {vocab_size}",
                vocab_size + 1
            )));
        }
        if counts
            .iter()
            .any(|r| r.iter().any(|&c| !c.is_finite() || c < 0.0))
        {
            return Err(CoreError::InvalidInput(
                "counts must be finite and non-negative".into(),
            ));
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        Ok(Self {
            vocab_size,
            k,
            counts,
            row_sums,
        })
    }

    pub fn uniform(vocab_size: usize, k: f64) -> Result<Self> {
        Self::new(vocab_size, k, vec![vec![0.0; vocab_size]; vocab_size + 1])
    }

    /// log (count(prev,tok)+k) / (count(prev)+k·|V|); `None` = start context.
    pub fn log_prob(&self, prev: Option<TokenId>, tok: TokenId) -> Result<f64> {
        let row = match prev {
            Some(p) if (p as usize) < self.vocab_size => p as usize,
            None => self.vocab_size,
            Some(p) => {
                return Err(CoreError::InvalidInput(format!(
                    "bigram context id {p} out of range"
                )))
            }
        };
        if tok as usize >= self.vocab_size {
            return Err(CoreError::InvalidInput(format!(
                "bigram token id {tok} out of range"
            )));
        }
        let num = self.counts[row][tok as usize] + self.k;
        let den = self.row_sums[row] + self.k * self.vocab_size as f64;
        Ok((num / den).ln())
    }

    /// Σ_t log P(tok_t | tok_{t-1}), start context at t = 0.
    pub fn score(&self, tokens: &[TokenId]) -> Result<f64> {
        let mut total = 0.0;
        let mut prev = None;
        for &tok in tokens {
            total += self.log_prob(prev, tok)?;
            prev = Some(tok);
        }
        Ok(total)
    }
}

/// Minimal recurrent scorer: h_t = tanh(W_h h_{t-1} + W_e onehot(prev)),
/// logits_t = W_o h_t. The pre-sequence state is zero and the pre-sequence
/// context token is eos.
#[derive(Clone, Debug)]
pub struct RnnLm {
    hidden: usize,
    vocab_size: usize,
    eos: TokenId,
    w_h: Vec<f64>, // H x H, row-major
    w_e: Vec<f64>, // H x V
    w_o: Vec<f64>, // V x H
}

impl RnnLm {
    pub fn new(
        vocab_size: usize,
        hidden: usize,
        eos: TokenId,
        w_h: Vec<f64>,
        w_e: Vec<f64>,
        w_o: Vec<f64>,
    ) -> Result<Self> {
        if hidden == 0 || vocab_size == 0 {
            return Err(CoreError::InvalidInput(
                "rnnlm dims must be positive".into(),
            ));
        }
        if w_h.len() != hidden * hidden
            || w_e.len() != hidden * vocab_size
            || w_o.len() != vocab_size * hidden
        {
            return Err(CoreError::InvalidInput("rnnlm weight shapes wrong".into()));
        }
        if [&w_h, &w_e, &w_o]
            .iter()
            .any(|w| w.iter().any(|x| !x.is_finite()))
        {
            return Err(CoreError::InvalidInput("rnnlm weights must be finite".into()));
        }
        Ok(Self {
            hidden,
            vocab_size,
            eos,
            w_h,
            w_e,
            w_o,
        })
    }

    pub fn seeded(vocab_size: usize, hidden: usize, eos: TokenId, seed: u64) -> Result<Self> {
        let w_h = rng::glorot_uniform(rng::mix3(seed, tags::RNNLM, 1), hidden, hidden);
        let w_e = rng::glorot_uniform(rng::mix3(seed, tags::RNNLM, 2), hidden, vocab_size);
        let w_o = rng::glorot_uniform(rng::mix3(seed, tags::RNNLM, 3), vocab_size, hidden);
        Self::new(vocab_size, hidden, eos, w_h, w_e, w_o)
    }

    pub fn zeros(vocab_size: usize, hidden: usize, eos: TokenId) -> Result<Self> {
        Self::new(
            vocab_size,
            hidden,
            eos,
            vec![0.0; hidden * hidden],
            vec![0.0; hidden * vocab_size],
            vec![0.0; vocab_size * hidden],
        )
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.hidden]
    }

    pub fn bos(&self) -> TokenId {
        self.eos
    }

    /// Advance one step: consume `prev` and return (new state, log-probs over
    /// the whole vocab for the next token).
    pub fn step(&self, state: &[f64], prev: TokenId) -> (Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let mut new_h = Vec::with_capacity(h);
        for i in 0..h {
            let mut acc = self.w_e[i * self.vocab_size + prev as usize];
            for (j, s) in state.iter().enumerate() {
                acc += self.w_h[i * h + j] * s;
            }
            new_h.push(acc.tanh());
        }
        let mut logits = Vec::with_capacity(self.vocab_size);
        for v in 0..self.vocab_size {
            let mut acc = 0.0;
            for (j, s) in new_h.iter().enumerate() {
                acc += self.w_o[v * h + j] * s;
            }
            logits.push(acc);
        }
        (new_h, log_softmax(&logits))
    }

    pub fn score(&self, tokens: &[TokenId]) -> Result<f64> {
        let mut total = 0.0;
        let mut state = self.initial_state();
        let mut prev = self.eos;
        for &tok in tokens {
            if tok as usize >= self.vocab_size {
                return Err(CoreError::InvalidInput(format!(
                    "rnnlm token id {tok} out of range"
                )));
            }
            let (new_state, lp) = self.step(&state, prev);
            total += lp[tok as usize];
            state = new_state;
            prev = tok;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bigram_is_uniform() {
        // all counts zero, k = 1: every conditional is 1/|V|
        let lm = BigramLm::uniform(4, 1.0).unwrap();
        let s = lm.score(&[0, 3, 1]).unwrap();
        assert!((s - (-3.0 * 4.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn smoothing_arithmetic() {
        // counts (a,b)=2, (a,c)=1, |V|=4, k=1: P(b|a) = 3/7
        let mut counts = vec![vec![0.0; 4]; 5];
        counts[0][1] = 2.0;
        counts[0][2] = 1.0;
        let lm = BigramLm::new(4, 1.0, counts).unwrap();
        let p = lm.log_prob(Some(0), 1).unwrap().exp();
        assert!((p - 3.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_token_uses_start_context() {
        let mut counts = vec![vec![0.0; 3]; 4];
        counts[3][2] = 5.0; // start -> eos
        let lm = BigramLm::new(3, 1.0, counts).unwrap();
        let s = lm.score(&[2]).unwrap();
        assert!((s - (6.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_rnnlm_is_uniform() {
        let lm = RnnLm::zeros(5, 8, 4).unwrap();
        let s = lm.score(&[0, 1, 4]).unwrap();
        assert!((s - (-3.0 * 5.0f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn single_step_ignores_recurrent_weights() {
        let mut a = RnnLm::seeded(5, 6, 4, 11).unwrap();
        let b = a.clone();
        // Perturb W_h only; a length-1 score must not change (state is zero).
        for x in &mut a.w_h {
            *x += 0.37;
        }
        let tok = [2u32];
        assert_eq!(
            a.score(&tok).unwrap().to_bits(),
            b.score(&tok).unwrap().to_bits()
        );
    }

    #[test]
    fn score_matches_manual_recursion() {
        let lm = RnnLm::seeded(5, 4, 4, 3).unwrap();
        let tokens = [0u32, 1, 4];
        // independent re-implementation of the recursion
        let h = lm.hidden_dim();
        let mut state = vec![0.0; h];
        let mut prev: TokenId = 4;
        let mut manual = 0.0;
        for &tok in &tokens {
            let mut new_h = vec![0.0; h];
            for (i, nh) in new_h.iter_mut().enumerate() {
                let mut acc = lm.w_e[i * 5 + prev as usize];
                for j in 0..h {
                    acc += lm.w_h[i * h + j] * state[j];
                }
                *nh = acc.tanh();
            }
            let logits: Vec<f64> = (0..5)
                .map(|v| (0..h).map(|j| lm.w_o[v * h + j] * new_h[j]).sum())
                .collect();
            manual += log_softmax(&logits)[tok as usize];
            state = new_h;
            prev = tok;
        }
        let got = lm.score(&tokens).unwrap();
        assert!((got - manual).abs() < 1e-12);
    }
}
