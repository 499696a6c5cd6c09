//! One-pass beam search over the four-component combined score. Partial
//! hypotheses carry their incremental CTC state and recurrent-LM state, so
//! every candidate expansion is scored in O(T'). Pruning ranks by the raw
//! (unnormalized) running combined score; length normalization happens later
//! in feature extraction.
//!
//! Each selected token also records the step's expansion snapshot: the top-K
//! combined expansion scores (the quantities the decoder actually ranks) and
//! a toy decoder embedding for the step.

use super::acoustic::UttAcoustics;
use super::ctc::CtcPrefixState;
use super::lm::{BigramLm, RnnLm};
use super::score::CombineWeights;
use super::vocab::TokenId;
use crate::logsum::log_softmax;
use crate::{CoreError, Result};

#[derive(Clone, Copy, Debug)]
pub struct BeamParams {
    pub beam_size: usize,
    pub n_best: usize,
    /// Capture width for per-step expansion scores; capped at the number of
    /// expansion candidates.
    pub top_k: usize,
    /// Longest content-token sequence the search will grow.
    pub max_content_len: usize,
}

impl BeamParams {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.n_best == 0 || self.top_k == 0 {
            return Err(CoreError::InvalidInput(
                "beam_size, n_best, and top_k must be positive".into(),
            ));
        }
        if self.n_best > self.beam_size {
            return Err(CoreError::InvalidInput(format!(
                "n_best {} exceeds beam_size {}",
                self.n_best, self.beam_size
            )));
        }
        Ok(())
    }

    /// Length bound derived from the longest reference the corpus can emit.
    pub fn content_len_bound(max_ref_len: usize) -> usize {
        2 * max_ref_len + 5
    }
}

/// A complete hypothesis: tokens end in eos (length U including eos), the
/// four component log-scores are unnormalized totals, and the per-step lists
/// have exactly U entries.
#[derive(Clone, Debug)]
pub struct Hypothesis {
    pub tokens: Vec<TokenId>,
    pub score_ctc: f64,
    pub score_att: f64,
    pub score_ngram: f64,
    pub score_rnnlm: f64,
    pub combined: f64,
    pub step_topk: Vec<Vec<(TokenId, f64)>>,
    pub step_dec_embed: Vec<Vec<f64>>,
}

impl Hypothesis {
    /// Tokens with the final eos stripped.
    pub fn content_tokens(&self) -> &[TokenId] {
        &self.tokens[..self.tokens.len() - 1]
    }

    /// U, counting eos.
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn component_scores(&self) -> [f64; 4] {
        [
            self.score_ctc,
            self.score_att,
            self.score_ngram,
            self.score_rnnlm,
        ]
    }
}

/// N-best list sorted by combined score, nonincreasing; ties broken by
/// lexicographic token order.
#[derive(Clone, Debug)]
pub struct NBestList {
    hypotheses: Vec<Hypothesis>,
}

impl NBestList {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(CoreError::InvalidInput("empty n-best list".into()));
        }
        for pair in hypotheses.windows(2) {
            if pair[0].combined < pair[1].combined {
                return Err(CoreError::InvalidInput(
                    "n-best list not sorted by combined score".into(),
                ));
            }
        }
        Ok(Self { hypotheses })
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn best(&self) -> &Hypothesis {
        &self.hypotheses[0]
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }
}

/// One utterance's full decoding artifact.
#[derive(Clone, Debug)]
pub struct DecodeRecord {
    pub utt_id: String,
    pub reference: Vec<TokenId>,
    pub nbest: NBestList,
    pub enc_frames: usize,
    pub enc_embed: Vec<Vec<f64>>,
    pub decoder_config_id: String,
}

struct Partial {
    tokens: Vec<TokenId>,
    ctc_state: CtcPrefixState,
    ctc: f64,
    att: f64,
    ngram: f64,
    rnnlm: f64,
    combined: f64,
    rnn_state: Vec<f64>,
    rnn_prev: TokenId,
    step_topk: Vec<Vec<(TokenId, f64)>>,
    step_dec: Vec<Vec<f64>>,
}

pub fn beam_search_decode(
    utt_id: &str,
    reference: &[TokenId],
    ac: &UttAcoustics,
    ngram: &BigramLm,
    rnnlm: &RnnLm,
    weights: &CombineWeights,
    params: &BeamParams,
    decoder_config_id: &str,
) -> Result<DecodeRecord> {
    params.validate()?;
    let blank = ac.vocab.blank();
    let eos = ac.vocab.eos();
    let lp: Vec<Vec<f64>> = ac.frame_logits.iter().map(|r| log_softmax(r)).collect();
    let cands = ac.vocab.candidate_ids();
    let k_cap = params.top_k.min(cands.len());

    let empty_state = CtcPrefixState::empty(&lp, blank);
    let init = Partial {
        tokens: Vec::new(),
        ctc: empty_state.score(),
        ctc_state: empty_state,
        att: 0.0,
        ngram: 0.0,
        rnnlm: 0.0,
        combined: 0.0,
        rnn_state: rnnlm.initial_state(),
        rnn_prev: rnnlm.bos(),
        step_topk: Vec::new(),
        step_dec: Vec::new(),
    };
    let mut live = vec![init];
    let mut done: Vec<Hypothesis> = Vec::new();

    for _ in 0..=params.max_content_len {
        if live.is_empty() {
            break;
        }
        let mut next: Vec<Partial> = Vec::new();
        for p in &live {
            let att_lp = log_softmax(&ac.att_step_logits(&p.tokens));
            let (rnn_state, rnn_lp) = rnnlm.step(&p.rnn_state, p.rnn_prev);
            let bigram_prev = p.tokens.last().copied();

            struct Expansion {
                token: TokenId,
                ctc_state: Option<CtcPrefixState>,
                ctc: f64,
                att: f64,
                ngram: f64,
                rnnlm: f64,
                combined: f64,
            }
            let mut expansions = Vec::with_capacity(cands.len());
            for &v in &cands {
                let (ctc_state, ctc_v) = if v == eos {
                    (None, p.ctc)
                } else {
                    let st = p.ctc_state.extend(&lp, blank, v);
                    let sc = st.score();
                    (Some(st), sc)
                };
                let att_v = p.att + att_lp[v as usize];
                let ng_v = p.ngram + ngram.log_prob(bigram_prev, v)?;
                let rnn_v = p.rnnlm + rnn_lp[v as usize];
                let combined = weights.combine(ctc_v, att_v, ng_v, rnn_v);
                if !combined.is_finite() {
                    // contract: non-finite hypotheses are discarded
                    continue;
                }
                expansions.push(Expansion {
                    token: v,
                    ctc_state,
                    ctc: ctc_v,
                    att: att_v,
                    ngram: ng_v,
                    rnnlm: rnn_v,
                    combined,
                });
            }

            // Step snapshot: the expansion scores this decoder ranks.
            let mut capture: Vec<(TokenId, f64)> =
                expansions.iter().map(|e| (e.token, e.combined)).collect();
            capture.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let margin = if capture.len() > 1 {
                capture[0].1 - capture[1].1
            } else {
                0.0
            };
            let step_entropy = expansion_entropy(&capture);
            capture.truncate(k_cap);

            for e in expansions {
                let at_bound = p.tokens.len() >= params.max_content_len;
                if e.token != eos && at_bound {
                    continue;
                }
                let mut step_topk = p.step_topk.clone();
                step_topk.push(capture.clone());
                let mut step_dec = p.step_dec.clone();
                step_dec.push(ac.dec_embedding(
                    margin,
                    step_entropy,
                    att_lp[e.token as usize],
                    e.token,
                ));
                if e.token == eos {
                    let mut tokens = p.tokens.clone();
                    tokens.push(eos);
                    done.push(Hypothesis {
                        tokens,
                        score_ctc: e.ctc,
                        score_att: e.att,
                        score_ngram: e.ngram,
                        score_rnnlm: e.rnnlm,
                        combined: e.combined,
                        step_topk,
                        step_dec_embed: step_dec,
                    });
                } else {
                    let mut tokens = p.tokens.clone();
                    tokens.push(e.token);
                    next.push(Partial {
                        tokens,
                        ctc_state: e.ctc_state.expect("content expansion has a CTC state"),
                        ctc: e.ctc,
                        att: e.att,
                        ngram: e.ngram,
                        rnnlm: e.rnnlm,
                        combined: e.combined,
                        rnn_state: rnn_state.clone(),
                        rnn_prev: e.token,
                        step_topk,
                        step_dec,
                    });
                }
            }
        }
        next.sort_by(|a, b| {
            b.combined
                .total_cmp(&a.combined)
                .then_with(|| a.tokens.cmp(&b.tokens))
        });
        next.truncate(params.beam_size);
        live = next;
    }

    if done.is_empty() {
        return Err(CoreError::EmptyResult);
    }
    done.sort_by(|a, b| {
        b.combined
            .total_cmp(&a.combined)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    done.truncate(params.n_best);

    Ok(DecodeRecord {
        utt_id: utt_id.to_string(),
        reference: reference.to_vec(),
        nbest: NBestList::new(done)?,
        enc_frames: ac.enc_frames(),
        enc_embed: ac.enc_embed.clone(),
        decoder_config_id: decoder_config_id.to_string(),
    })
}

/// Shannon entropy (nats) of the softmax over a step's expansion scores.
fn expansion_entropy(scored: &[(TokenId, f64)]) -> f64 {
    let hi = scored
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for &(_, s) in scored {
        z += (s - hi).exp();
    }
    let ln_z = z.ln();
    let mut h = 0.0;
    for &(_, s) in scored {
        let lp = s - hi - ln_z;
        h -= lp.exp() * lp;
    }
    h
}
