//! The deterministic toy acoustic model. Each reference token emits
//! `frames_per_token` frames whose CTC logits are a scaled one-hot of the
//! underlying token plus seeded Gaussian noise of magnitude `noise_level`;
//! attention step logits are built the same way, conditioned on the position
//! within the reference alignment. Identical seeds and inputs reproduce
//! bit-identical outputs, and at zero noise the argmax frame path collapses
//! to the reference, so ground truth is exact and the error rate is a
//! controllable function of the noise level.

use super::vocab::{TokenId, Vocab};
use crate::logsum::log_softmax;
use crate::rng::{self, tags};
use crate::{CoreError, Result};

/// Magnitude of the one-hot target logit; noise_level is measured against
/// this scale.
pub const TOKEN_LOGIT_SCALE: f64 = 4.0;

/// Encoder-embedding noise relative to token-embedding norm (~1).
const ENC_NOISE_RATIO: f64 = 1.0 / TOKEN_LOGIT_SCALE;

#[derive(Clone, Debug, PartialEq)]
pub struct ToyAcousticModel {
    pub vocab: Vocab,
    pub frames_per_token: usize,
    pub noise_level: f64,
    pub embed_dim: usize,
    pub seed: u64,
}

impl ToyAcousticModel {
    pub fn new(
        vocab: Vocab,
        frames_per_token: usize,
        noise_level: f64,
        embed_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if frames_per_token < 2 {
            // A repeated reference token renders a leading blank frame in its
            // block; with a single frame per token the token would vanish.
            return Err(CoreError::InvalidInput(
                "frames_per_token must be at least 2".into(),
            ));
        }
        if !(noise_level.is_finite() && noise_level >= 0.0) {
            return Err(CoreError::InvalidInput(
                "noise_level must be finite and non-negative".into(),
            ));
        }
        if embed_dim == 0 {
            return Err(CoreError::InvalidInput("embed_dim must be positive".into()));
        }
        Ok(Self {
            vocab,
            frames_per_token,
            noise_level,
            embed_dim,
            seed,
        })
    }

    /// Seeded per-token embedding, norm roughly 1.
    pub fn token_embedding(&self, id: TokenId) -> Vec<f64> {
        let scale = 1.0 / (self.embed_dim as f64).sqrt();
        rng::gaussian_vec(
            rng::mix3(self.seed, tags::TOKEN_EMBED, u64::from(id)),
            self.embed_dim,
            scale,
        )
    }

    /// Render one utterance's decoding-time artifacts from its reference and
    /// per-utterance seed.
    pub fn render(&self, reference: &[TokenId], utt_seed: u64) -> Result<UttAcoustics> {
        if reference.is_empty() {
            return Err(CoreError::InvalidInput("empty reference".into()));
        }
        for &tok in reference {
            if !self.vocab.is_content(tok) {
                return Err(CoreError::InvalidInput(format!(
                    "reference token {tok} is not a content token"
                )));
            }
        }
        let v = self.vocab.size();
        let d = self.embed_dim;
        let r = self.frames_per_token;
        let n_frames = r * reference.len();

        // Frame-level target path; a repeated token's block opens with a
        // blank so the argmax path still collapses to the reference.
        let mut frame_targets = Vec::with_capacity(n_frames);
        for (i, &tok) in reference.iter().enumerate() {
            let repeated = i > 0 && reference[i - 1] == tok;
            for j in 0..r {
                if repeated && j == 0 {
                    frame_targets.push(self.vocab.blank());
                } else {
                    frame_targets.push(tok);
                }
            }
        }

        let ctc_noise = rng::gaussian_vec(
            rng::mix3(self.seed, utt_seed, tags::CTC_FRAMES),
            n_frames * v,
            self.noise_level,
        );
        let mut frame_logits = Vec::with_capacity(n_frames);
        for (t, &target) in frame_targets.iter().enumerate() {
            let mut row = vec![0.0; v];
            row[target as usize] = TOKEN_LOGIT_SCALE;
            for (k, x) in row.iter_mut().enumerate() {
                *x += ctc_noise[t * v + k];
            }
            frame_logits.push(row);
        }

        let embeds: Vec<Vec<f64>> = (0..v as TokenId).map(|id| self.token_embedding(id)).collect();
        let enc_noise = rng::gaussian_vec(
            rng::mix3(self.seed, utt_seed, tags::ENC_EMBED),
            n_frames * d,
            self.noise_level * ENC_NOISE_RATIO,
        );
        let mut enc_embed = Vec::with_capacity(n_frames);
        for (t, &target) in frame_targets.iter().enumerate() {
            let mut row = embeds[target as usize].clone();
            for (k, x) in row.iter_mut().enumerate() {
                *x += enc_noise[t * d + k];
            }
            enc_embed.push(row);
        }
        let mut pooled_enc = vec![0.0; d];
        for row in &enc_embed {
            for (k, x) in row.iter().enumerate() {
                pooled_enc[k] += x;
            }
        }
        for x in &mut pooled_enc {
            *x /= n_frames as f64;
        }

        // Attention targets: the reference positions, then eos for every
        // later step. Step noise is keyed off the pooled encoder state so the
        // step logits are a function of (prefix, pooled encoder state) only.
        let mut att_targets = reference.to_vec();
        att_targets.push(self.vocab.eos());
        let att_seed = rng::mix(rng::hash_floats(&pooled_enc), tags::ATT_STEP);

        // Projection for the toy decoder state; a property of the decoder,
        // not of the utterance.
        let dec_in = 3 + 2 * d;
        let dec_proj = rng::glorot_uniform(rng::mix(self.seed, tags::DEC_PROJ), d, dec_in);

        Ok(UttAcoustics {
            vocab: self.vocab.clone(),
            frame_logits,
            enc_embed,
            pooled_enc,
            att_targets,
            att_scale: TOKEN_LOGIT_SCALE,
            att_sigma: self.noise_level,
            att_seed,
            tok_embed: embeds,
            dec_proj,
            embed_dim: d,
        })
    }
}

/// Everything the decoder and feature extractor need for one utterance.
#[derive(Clone, Debug)]
pub struct UttAcoustics {
    pub vocab: Vocab,
    /// T' x |V| unnormalized CTC frame logits.
    pub frame_logits: Vec<Vec<f64>>,
    /// T' x D encoder embeddings.
    pub enc_embed: Vec<Vec<f64>>,
    pub pooled_enc: Vec<f64>,
    att_targets: Vec<TokenId>,
    att_scale: f64,
    att_sigma: f64,
    att_seed: u64,
    /// |V| x D token embeddings (decoder side).
    pub tok_embed: Vec<Vec<f64>>,
    /// D x (3 + 2D) projection producing per-step decoder embeddings.
    pub dec_proj: Vec<f64>,
    pub embed_dim: usize,
}

impl UttAcoustics {
    pub fn enc_frames(&self) -> usize {
        self.frame_logits.len()
    }

    pub fn reference_len(&self) -> usize {
        self.att_targets.len() - 1
    }

    /// Attention-decoder logits for the step that follows `prefix`.
    pub fn att_step_logits(&self, prefix: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.size();
        let pos = prefix.len().min(self.att_targets.len() - 1);
        let target = self.att_targets[pos];
        let seed = rng::mix3(self.att_seed, pos as u64, rng::hash_tokens(prefix));
        let mut row = rng::gaussian_vec(seed, v, self.att_sigma);
        row[target as usize] += self.att_scale;
        row
    }

    /// Autoregressive attention score: Σ_t log softmax(step logits)[token_t],
    /// over every step including the final eos.
    pub fn attention_score(&self, tokens: &[TokenId]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(CoreError::InvalidInput(
                "attention score of empty token sequence".into(),
            ));
        }
        if *tokens.last().unwrap() != self.vocab.eos() {
            return Err(CoreError::InvalidInput(
                "token sequence must end in eos".into(),
            ));
        }
        let mut total = 0.0;
        for (t, &tok) in tokens.iter().enumerate() {
            if !self.vocab.contains(tok) || tok == self.vocab.blank() {
                return Err(CoreError::InvalidInput(format!(
                    "token id {tok} not scorable by the attention decoder"
                )));
            }
            let lp = log_softmax(&self.att_step_logits(&tokens[..t]));
            total += lp[tok as usize];
        }
        Ok(total)
    }

    /// Toy decoder embedding for a step: a fixed tanh projection of step
    /// certainty statistics, the chosen token's embedding, and the pooled
    /// encoder state.
    pub fn dec_embedding(
        &self,
        margin: f64,
        step_entropy: f64,
        att_logprob: f64,
        token: TokenId,
    ) -> Vec<f64> {
        let d = self.embed_dim;
        let dec_in = 3 + 2 * d;
        let emb = &self.tok_embed[token as usize];
        let mut input = Vec::with_capacity(dec_in);
        input.push(margin);
        input.push(step_entropy);
        input.push(att_logprob);
        input.extend_from_slice(emb);
        input.extend_from_slice(&self.pooled_enc);
        let mut out = Vec::with_capacity(d);
        for row in 0..d {
            let mut acc = 0.0;
            for (k, x) in input.iter().enumerate() {
                acc += self.dec_proj[row * dec_in + k] * x;
            }
            out.push(acc.tanh());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(noise: f64, seed: u64) -> ToyAcousticModel {
        ToyAcousticModel::new(Vocab::synthetic(3).unwrap(), 3, noise, 4, seed).unwrap()
    }

    #[test]
    fn render_is_deterministic() {
        let m = model(1.0, 9);
        let a = m.render(&[0, 2, 1], 77).unwrap();
        let b = m.render(&[0, 2, 1], 77).unwrap();
        assert_eq!(a.frame_logits, b.frame_logits);
        assert_eq!(a.enc_embed, b.enc_embed);
        assert_eq!(
            a.att_step_logits(&[0, 2]),
            b.att_step_logits(&[0, 2])
        );
    }

    #[test]
    fn zero_noise_argmax_path_spells_reference() {
        let m = model(0.0, 5);
        let reference = vec![0, 0, 1, 2, 2];
        let ac = m.render(&reference, 123).unwrap();
        let mut collapsed: Vec<TokenId> = Vec::new();
        let mut prev = None;
        for row in &ac.frame_logits {
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0 as TokenId;
            if prev != Some(argmax) && argmax != ac.vocab.blank() {
                collapsed.push(argmax);
            }
            prev = Some(argmax);
        }
        assert_eq!(collapsed, reference);
    }

    #[test]
    fn zero_noise_attention_prefers_reference_token() {
        let m = model(0.0, 5);
        let ac = m.render(&[1], 9).unwrap();
        // Among 1-token hypotheses, "t1 eos" scores highest.
        let eos = ac.vocab.eos();
        let best = ac.attention_score(&[1, eos]).unwrap();
        for tok in ac.vocab.content_ids() {
            if tok == 1 {
                continue;
            }
            assert!(ac.attention_score(&[tok, eos]).unwrap() < best);
        }
    }

    #[test]
    fn attention_score_sums_per_step_terms() {
        let m = model(0.8, 21);
        let ac = m.render(&[0, 1], 4).unwrap();
        let eos = ac.vocab.eos();
        let tokens = vec![0, 1, eos];
        let mut manual = 0.0;
        for t in 0..tokens.len() {
            let lp = log_softmax(&ac.att_step_logits(&tokens[..t]));
            manual += lp[tokens[t] as usize];
        }
        let got = ac.attention_score(&tokens).unwrap();
        assert_eq!(got.to_bits(), manual.to_bits());
    }

    #[test]
    fn attention_rejects_bad_sequences() {
        let m = model(0.5, 1);
        let ac = m.render(&[0], 2).unwrap();
        assert!(ac.attention_score(&[]).is_err());
        assert!(ac.attention_score(&[0]).is_err()); // missing eos
    }

    #[test]
    fn model_validation() {
        let v = Vocab::synthetic(2).unwrap();
        assert!(ToyAcousticModel::new(v.clone(), 1, 0.0, 4, 0).is_err());
        assert!(ToyAcousticModel::new(v.clone(), 2, -1.0, 4, 0).is_err());
        assert!(ToyAcousticModel::new(v, 2, 0.0, 0, 0).is_err());
    }
}
