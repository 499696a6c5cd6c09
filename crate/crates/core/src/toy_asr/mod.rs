//! Scoring mathematics of joint CTC-attention beam-search decoding over a
//! deterministic toy acoustic/language model, with all per-hypothesis and
//! per-step artifacts the confidence classifier consumes.

mod acoustic;
mod beam;
mod ctc;
mod lm;
mod score;
mod vocab;

pub use acoustic::{ToyAcousticModel, UttAcoustics, TOKEN_LOGIT_SCALE};
pub use beam::{beam_search_decode, BeamParams, DecodeRecord, Hypothesis, NBestList};
pub use ctc::{ctc_prefix_score, CtcPrefixState};
pub use lm::{BigramLm, RnnLm};
pub use score::{combine_hypothesis_score, mtl_loss, CombineWeights};
pub use vocab::{TokenId, Vocab};
