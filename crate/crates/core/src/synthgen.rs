//! Labeled synthetic corpora: references drawn from a seeded source bigram
//! model, acoustics rendered by the toy acoustic model, and decode logs
//! produced by driving the beam-search decoder at a controllable sentence
//! error rate. Ships a matched/mismatched decoder pair for transfer studies.

use crate::eval::label_record;
use crate::rng::{self, tags};
use crate::toy_asr::{
    beam_search_decode, BeamParams, BigramLm, CombineWeights, DecodeRecord, RnnLm,
    ToyAcousticModel, TokenId, UttAcoustics, Vocab,
};
use crate::{CoreError, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn default_frames_per_token() -> usize {
    3
}

fn default_embed_dim() -> usize {
    8
}

/// Corpus recipe. Reproducible: the corpus seed splits into per-utterance
/// seeds, so generation order (or parallelism) never changes the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_utts: usize,
    /// Inclusive (min, max) reference token counts.
    pub len_range: (usize, usize),
    /// Total vocabulary size including blank and eos.
    pub vocab_size: usize,
    pub source_bigram_seed: u64,
    pub noise_level: f64,
    pub seed: u64,
    #[serde(default = "default_frames_per_token")]
    pub frames_per_token: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 3 {
            return Err(CoreError::InvalidConfig(format!(
                "vocab_size {} too small: need blank, eos, and a content token",
                self.vocab_size
            )));
        }
        if self.len_range.0 < 1 || self.len_range.0 > self.len_range.1 {
            return Err(CoreError::InvalidConfig(format!(
                "bad len_range {:?}",
                self.len_range
            )));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(CoreError::InvalidConfig("bad noise_level".into()));
        }
        Ok(())
    }

    pub fn vocab(&self) -> Result<Vocab> {
        Vocab::synthetic(self.vocab_size - 2)
    }

    /// The generation-time acoustic model; also what the matched decoder uses.
    pub fn acoustic_model(&self) -> Result<ToyAcousticModel> {
        ToyAcousticModel::new(
            self.vocab()?,
            self.frames_per_token,
            self.noise_level,
            self.embed_dim,
            rng::mix(self.seed, tags::ACOUSTIC_MODEL),
        )
    }
}

/// Seeded source distribution over content tokens: initial weights plus a
/// bigram transition table, mildly non-uniform.
#[derive(Clone, Debug)]
pub struct SourceBigram {
    content: Vec<TokenId>,
    init: Vec<f64>,
    trans: Vec<Vec<f64>>,
}

impl SourceBigram {
    pub fn seeded(content: Vec<TokenId>, seed: u64) -> Self {
        let n = content.len();
        let mut r = rng::chacha(rng::mix(seed, tags::REFERENCE));
        let draw = |r: &mut rand_chacha::ChaCha8Rng, n: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.2..1.2)).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|x| x / z).collect()
        };
        let init = draw(&mut r, n);
        let trans = (0..n).map(|_| draw(&mut r, n)).collect();
        Self {
            content,
            init,
            trans,
        }
    }

    fn sample_index(probs: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn sample(&self, rng: &mut rand_chacha::ChaCha8Rng, len: usize) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(len);
        let mut idx = Self::sample_index(&self.init, rng.gen::<f64>());
        out.push(self.content[idx]);
        for _ in 1..len {
            idx = Self::sample_index(&self.trans[idx], rng.gen::<f64>());
            out.push(self.content[idx]);
        }
        out
    }

    pub fn initial_probs(&self) -> &[f64] {
        &self.init
    }

    pub fn transition_probs(&self) -> &[Vec<f64>] {
        &self.trans
    }
}

/// One generated utterance: id, reference, the seed its acoustics derive
/// from, and the acoustics as rendered at corpus settings.
#[derive(Clone, Debug)]
pub struct SynthUtterance {
    pub utt_id: String,
    pub reference: Vec<TokenId>,
    pub utt_seed: u64,
    pub acoustics: UttAcoustics,
}

/// A decode record paired with its exact-match label.
#[derive(Clone, Debug)]
pub struct LabeledRecord {
    pub record: DecodeRecord,
    pub label: u8,
}

/// Draw references and render acoustics. Deterministic given the config.
pub fn generate_corpus(config: &CorpusConfig) -> Result<Vec<SynthUtterance>> {
    config.validate()?;
    let vocab = config.vocab()?;
    let model = config.acoustic_model()?;
    let source = SourceBigram::seeded(vocab.content_ids(), config.source_bigram_seed);
    let (len_min, len_max) = config.len_range;
    (0..config.n_utts)
        .into_par_iter()
        .map(|i| {
            let utt_seed = rng::mix3(config.seed, tags::UTTERANCE, i as u64);
            let mut r = rng::chacha(rng::mix(utt_seed, tags::REFERENCE));
            let len = r.gen_range(len_min..=len_max);
            let reference = source.sample(&mut r, len);
            let acoustics = model.render(&reference, utt_seed)?;
            Ok(SynthUtterance {
                utt_id: format!("utt{i:06}"),
                reference,
                utt_seed,
                acoustics,
            })
        })
        .collect()
}

/// Full decoder description: how to re-render acoustics (as an ASR system's
/// internal scorer would see the utterance) and how to search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    pub id: String,
    pub frames_per_token: usize,
    pub embed_dim: usize,
    pub noise_level: f64,
    pub acoustic_seed: u64,
    pub weights: CombineWeights,
    pub beam_size: usize,
    pub n_best: usize,
    pub top_k: usize,
    /// Longest reference the corpus can emit; bounds hypothesis length.
    pub max_ref_len: usize,
    pub ngram_k: f64,
    pub rnnlm_hidden: usize,
    pub rnnlm_seed: u64,
}

impl DecoderConfig {
    /// Decoder matched to the corpus: identical rendering parameters, so it
    /// sees exactly the generated acoustics.
    pub fn matched(corpus: &CorpusConfig) -> Self {
        Self {
            id: "asr_matched".into(),
            frames_per_token: corpus.frames_per_token,
            embed_dim: corpus.embed_dim,
            noise_level: corpus.noise_level,
            acoustic_seed: rng::mix(corpus.seed, tags::ACOUSTIC_MODEL),
            weights: CombineWeights::default(),
            beam_size: 12,
            n_best: 10,
            top_k: 20,
            max_ref_len: corpus.len_range.1,
            ngram_k: 1.0,
            rnnlm_hidden: 16,
            rnnlm_seed: rng::mix(corpus.seed, tags::RNNLM),
        }
    }

    /// Out-of-domain decoder: differently seeded scorer with fewer frames per
    /// token, so it makes more (and different) errors on the same utterances.
    pub fn mismatched(corpus: &CorpusConfig) -> Self {
        let mut cfg = Self::matched(corpus);
        cfg.id = "asr_mismatched".into();
        cfg.acoustic_seed = rng::mix(corpus.seed, tags::MISMATCHED_MODEL);
        cfg.frames_per_token = (corpus.frames_per_token - 1).max(2);
        cfg
    }

    pub fn acoustic_model(&self, vocab: &Vocab) -> Result<ToyAcousticModel> {
        ToyAcousticModel::new(
            vocab.clone(),
            self.frames_per_token,
            self.noise_level,
            self.embed_dim,
            self.acoustic_seed,
        )
    }

    pub fn beam_params(&self) -> BeamParams {
        BeamParams {
            beam_size: self.beam_size,
            n_best: self.n_best,
            top_k: self.top_k,
            max_content_len: BeamParams::content_len_bound(self.max_ref_len),
        }
    }

    /// Language models fused during decoding. The bigram is "trained" on the
    /// source distribution (scaled pseudo-counts with an end-of-sequence
    /// column); the recurrent LM is a fixed seeded scorer.
    pub fn language_models(
        &self,
        vocab: &Vocab,
        source: &SourceBigram,
        avg_len: f64,
    ) -> Result<(BigramLm, RnnLm)> {
        let v = vocab.size();
        let content = vocab.content_ids();
        let p_end = (1.0 / avg_len).min(0.5);
        let mut counts = vec![vec![0.0; v]; v + 1];
        for (i, &prev) in content.iter().enumerate() {
            for (j, &next) in content.iter().enumerate() {
                counts[prev as usize][next as usize] =
                    1000.0 * (1.0 - p_end) * source.transition_probs()[i][j];
            }
            counts[prev as usize][vocab.eos() as usize] = 1000.0 * p_end;
        }
        for (j, &next) in content.iter().enumerate() {
            counts[v][next as usize] = 1000.0 * source.initial_probs()[j];
        }
        let ngram = BigramLm::new(v, self.ngram_k, counts)?;
        let rnnlm = RnnLm::seeded(v, self.rnnlm_hidden, vocab.eos(), self.rnnlm_seed)?;
        Ok((ngram, rnnlm))
    }
}

/// Decode a corpus with one decoder config, attaching exact-match labels and
/// the decoder id. Utterances are independent; errors carry the utterance id.
pub fn decode_corpus(
    corpus: &[SynthUtterance],
    corpus_config: &CorpusConfig,
    decoder: &DecoderConfig,
) -> Result<Vec<LabeledRecord>> {
    let vocab = corpus_config.vocab()?;
    let model = decoder.acoustic_model(&vocab)?;
    let source = SourceBigram::seeded(vocab.content_ids(), corpus_config.source_bigram_seed);
    let avg_len = (corpus_config.len_range.0 + corpus_config.len_range.1) as f64 / 2.0;
    let (ngram, rnnlm) = decoder.language_models(&vocab, &source, avg_len)?;
    let params = decoder.beam_params();
    let weights = decoder.weights;

    corpus
        .par_iter()
        .map(|utt| {
            let run = || -> Result<LabeledRecord> {
                // The decoder sees the utterance through its own scorer.
                let acoustics = model.render(&utt.reference, utt.utt_seed)?;
                let record = beam_search_decode(
                    &utt.utt_id,
                    &utt.reference,
                    &acoustics,
                    &ngram,
                    &rnnlm,
                    &weights,
                    &params,
                    &decoder.id,
                )?;
                let label = label_record(&record);
                Ok(LabeledRecord { record, label })
            };
            run().map_err(|e| CoreError::UttDecode {
                utt_id: utt.utt_id.clone(),
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn measure_ser(records: &[LabeledRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let wrong = records.iter().filter(|r| r.label == 0).count();
    wrong as f64 / records.len() as f64
}

/// Bisection on noise_level until the matched-decoder SER lands within
/// `tol` of `target_ser` (or the iteration budget runs out; the last
/// midpoint is returned either way).
pub fn calibrate_noise(
    base: &CorpusConfig,
    target_ser: f64,
    tol: f64,
    probe_utts: usize,
    max_iters: usize,
) -> Result<f64> {
    let ser_at = |noise: f64| -> Result<f64> {
        let mut cfg = base.clone();
        cfg.noise_level = noise;
        cfg.n_utts = probe_utts;
        let corpus = generate_corpus(&cfg)?;
        let records = decode_corpus(&corpus, &cfg, &DecoderConfig::matched(&cfg))?;
        Ok(measure_ser(&records))
    };
    let mut lo = 0.0;
    let mut hi = 10.0 * crate::toy_asr::TOKEN_LOGIT_SCALE;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iters {
        mid = 0.5 * (lo + hi);
        let ser = ser_at(mid)?;
        if (ser - target_ser).abs() <= tol {
            return Ok(mid);
        }
        if ser > target_ser {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(noise: f64) -> CorpusConfig {
        CorpusConfig {
            n_utts: 20,
            len_range: (2, 4),
            vocab_size: 6,
            source_bigram_seed: 5,
            noise_level: noise,
            seed: 42,
            frames_per_token: 3,
            embed_dim: 4,
        }
    }

    #[test]
    fn empty_corpus() {
        let mut cfg = small_config(0.0);
        cfg.n_utts = 0;
        assert!(generate_corpus(&cfg).unwrap().is_empty());
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = small_config(1.0);
        let a = generate_corpus(&cfg).unwrap();
        let b = generate_corpus(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.reference, y.reference);
            assert_eq!(x.utt_seed, y.utt_seed);
            assert_eq!(x.acoustics.frame_logits, y.acoustics.frame_logits);
        }
    }

    #[test]
    fn zero_noise_labels_all_one() {
        let cfg = small_config(0.0);
        let corpus = generate_corpus(&cfg).unwrap();
        let records = decode_corpus(&corpus, &cfg, &DecoderConfig::matched(&cfg)).unwrap();
        assert!(records.iter().all(|r| r.label == 1));
        assert_eq!(measure_ser(&records), 0.0);
    }

    #[test]
    fn label_rule_recomputes_exactly() {
        let cfg = small_config(2.5);
        let corpus = generate_corpus(&cfg).unwrap();
        let records = decode_corpus(&corpus, &cfg, &DecoderConfig::matched(&cfg)).unwrap();
        for r in &records {
            assert_eq!(r.label, label_record(&r.record));
        }
    }

    #[test]
    fn matched_decoder_sees_generated_acoustics() {
        let cfg = small_config(1.5);
        let corpus = generate_corpus(&cfg).unwrap();
        let dec = DecoderConfig::matched(&cfg);
        let vocab = cfg.vocab().unwrap();
        let model = dec.acoustic_model(&vocab).unwrap();
        let re = model
            .render(&corpus[0].reference, corpus[0].utt_seed)
            .unwrap();
        assert_eq!(re.frame_logits, corpus[0].acoustics.frame_logits);
    }

    #[test]
    fn rejects_tiny_vocab() {
        let mut cfg = small_config(0.0);
        cfg.vocab_size = 2;
        assert!(matches!(
            generate_corpus(&cfg),
            Err(CoreError::InvalidConfig(_))
        ));
    }

    #[test]
    fn mismatched_decoder_differs() {
        let cfg = small_config(2.0);
        let m = DecoderConfig::matched(&cfg);
        let mm = DecoderConfig::mismatched(&cfg);
        assert_ne!(m.acoustic_seed, mm.acoustic_seed);
        assert!(mm.frames_per_token < m.frames_per_token);
    }
}
