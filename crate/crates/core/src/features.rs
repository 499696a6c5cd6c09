//! Predictor-feature extraction: turns a decode record into a fixed-length,
//! named numeric vector. Families follow the decoding artifacts: utterance
//! scores (single and n-best), average token duration, per-step entropy and
//! probability summaries over the captured top-K expansion scores, and
//! mean-pooled encoder/decoder embeddings. Fusion is concatenation in spec
//! order; the name list depends only on the spec, never on record contents.

use crate::toy_asr::DecodeRecord;
use crate::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NBestMode {
    Weighted,
    PerComponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbMode {
    AvgVec,
    SeqStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureFamily {
    /// Normalized combined score of the best hypothesis.
    WeightedScore,
    /// The four normalized component scores of the best hypothesis.
    ComponentScores,
    /// Normalized scores of hypotheses 1..n; short lists replicate the worst
    /// available hypothesis.
    NBestScores { n: usize, mode: NBestMode },
    /// Encoder-frames over decoded-tokens length ratio.
    AvgDur,
    /// Average per-step entropy of the top-K expansion-score distribution.
    Entropy,
    /// Per-rank summary of the per-step top-K probability vectors.
    ProbSummary { mode: ProbMode },
    /// Mean-pooled encoder embedding.
    EncEmbed,
    /// Mean-pooled decoder embedding of the best hypothesis.
    DecEmbed,
}

impl FeatureFamily {
    fn key(&self) -> &'static str {
        match self {
            Self::WeightedScore => "weighted_score",
            Self::ComponentScores => "component_scores",
            Self::NBestScores { .. } => "n_best_scores",
            Self::AvgDur => "avg_dur",
            Self::Entropy => "entropy",
            Self::ProbSummary { .. } => "prob_summary",
            Self::EncEmbed => "enc_embed",
            Self::DecEmbed => "dec_embed",
        }
    }
}

/// What to extract, in what order. `top_k` is the per-step distribution
/// width for the entropy/probability families; `embed_dim` pins the pooled
/// embedding width so the name list is record-independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub families: Vec<FeatureFamily>,
    pub top_k: usize,
    pub embed_dim: usize,
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(CoreError::InvalidConfig("no feature families enabled".into()));
        }
        if self.top_k == 0 {
            return Err(CoreError::InvalidConfig("top_k must be at least 1".into()));
        }
        for f in &self.families {
            if let FeatureFamily::NBestScores { n, .. } = f {
                if *n == 0 {
                    return Err(CoreError::InvalidConfig("n-best depth must be ≥ 1".into()));
                }
            }
        }
        let mut keys: Vec<&str> = self.families.iter().map(FeatureFamily::key).collect();
        keys.sort_unstable();
        keys.dedup();
        if keys.len() != self.families.len() {
            return Err(CoreError::InvalidConfig(
                "duplicate feature family in spec".into(),
            ));
        }
        Ok(())
    }

    /// Stable feature names, a function of the spec alone.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for family in &self.families {
            match family {
                FeatureFamily::WeightedScore => names.push("alpha_weighted".into()),
                FeatureFamily::ComponentScores => {
                    for c in ["alpha_ctc", "alpha_att", "alpha_ngram", "alpha_rnnlm"] {
                        names.push(c.into());
                    }
                }
                FeatureFamily::NBestScores { n, mode } => match mode {
                    NBestMode::Weighted => {
                        for i in 1..=*n {
                            names.push(format!("nbest_w_{i:02}"));
                        }
                    }
                    NBestMode::PerComponent => {
                        for i in 1..=*n {
                            for c in ["ctc", "att", "ngram", "rnnlm"] {
                                names.push(format!("nbest_{i:02}_{c}"));
                            }
                        }
                    }
                },
                FeatureFamily::AvgDur => names.push("avg_dur".into()),
                FeatureFamily::Entropy => names.push("ent".into()),
                FeatureFamily::ProbSummary { mode } => match mode {
                    ProbMode::AvgVec => {
                        for r in 1..=self.top_k {
                            names.push(format!("prob_mean_{r:02}"));
                        }
                    }
                    ProbMode::SeqStats => {
                        for r in 1..=self.top_k {
                            for s in ["mean", "std", "min", "max"] {
                                names.push(format!("prob_r{r:02}_{s}"));
                            }
                        }
                    }
                },
                FeatureFamily::EncEmbed => {
                    for j in 0..self.embed_dim {
                        names.push(format!("encfeat_{j:02}"));
                    }
                }
                FeatureFamily::DecEmbed => {
                    for j in 0..self.embed_dim {
                        names.push(format!("decfeat_{j:02}"));
                    }
                }
            }
        }
        names
    }

    pub fn dim(&self) -> usize {
        self.feature_names().len()
    }

    pub fn has_family(&self, key: &str) -> bool {
        self.families.iter().any(|f| f.key() == key)
    }
}

/// Named feature vector; every value finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Length normalization: score / token_count, tokens counted including eos.
pub fn normalize_score(score: f64, token_count: usize) -> Result<f64> {
    if token_count == 0 {
        return Err(CoreError::InvalidInput(
            "token count must be at least 1".into(),
        ));
    }
    Ok(score / token_count as f64)
}

/// The four normalized component scores of the best hypothesis.
pub fn component_scores(record: &DecodeRecord) -> Result<[f64; 4]> {
    let best = record.nbest.best();
    let u = best.token_count();
    let [ctc, att, ngram, rnnlm] = best.component_scores();
    Ok([
        normalize_score(ctc, u)?,
        normalize_score(att, u)?,
        normalize_score(ngram, u)?,
        normalize_score(rnnlm, u)?,
    ])
}

/// Normalized scores of hypotheses 1..n. With fewer than n hypotheses the
/// worst available one fills the remaining positions.
pub fn nbest_score_vector(record: &DecodeRecord, n: usize, mode: NBestMode) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(CoreError::InvalidInput("n-best depth must be ≥ 1".into()));
    }
    let hyps = record.nbest.hypotheses();
    let mut out = Vec::new();
    for i in 0..n {
        let h = &hyps[i.min(hyps.len() - 1)];
        let u = h.token_count();
        match mode {
            NBestMode::Weighted => out.push(normalize_score(h.combined, u)?),
            NBestMode::PerComponent => {
                for s in h.component_scores() {
                    out.push(normalize_score(s, u)?);
                }
            }
        }
    }
    Ok(out)
}

/// Stable softmax of logits/τ; the output sums to 1 within 1e-12.
pub fn softmax_with_temperature(logits: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    if logits.is_empty() {
        return Err(CoreError::InvalidInput("softmax of empty logits".into()));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::InvalidInput("non-finite logit".into()));
    }
    let scaled: Vec<f64> = logits.iter().map(|&x| x / tau).collect();
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|&x| (x - hi).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// Shannon entropy in nats of a probability vector.
pub fn entropy_nats(probs: &[f64]) -> f64 {
    probs
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

/// Per-step entropies of the temperature-scaled top-K distributions, plus
/// their mean.
pub fn token_entropy(steps: &[Vec<f64>], taus: &[f64]) -> Result<(Vec<f64>, f64)> {
    if steps.is_empty() {
        return Err(CoreError::InvalidInput("no decoder steps".into()));
    }
    if steps.len() != taus.len() {
        return Err(CoreError::InvalidInput(
            "one temperature per step required".into(),
        ));
    }
    let mut ents = Vec::with_capacity(steps.len());
    for (logits, &tau) in steps.iter().zip(taus) {
        let p = softmax_with_temperature(logits, tau)?;
        ents.push(entropy_nats(&p));
    }
    let avg = ents.iter().sum::<f64>() / ents.len() as f64;
    Ok((ents, avg))
}

/// Fixed-size summary of the per-step probability vectors. `AvgVec` is the
/// per-rank mean; `SeqStats` is per-rank (mean, stddev, min, max), which
/// keeps the sequence dispersion the plain average discards.
pub fn prob_summary(steps: &[Vec<f64>], taus: &[f64], mode: ProbMode) -> Result<Vec<f64>> {
    if steps.is_empty() {
        return Err(CoreError::InvalidInput("no decoder steps".into()));
    }
    if steps.len() != taus.len() {
        return Err(CoreError::InvalidInput(
            "one temperature per step required".into(),
        ));
    }
    let k = steps[0].len();
    if steps.iter().any(|s| s.len() != k) {
        return Err(CoreError::InvalidInput(
            "ragged per-step logit lists".into(),
        ));
    }
    let probs: Vec<Vec<f64>> = steps
        .iter()
        .zip(taus)
        .map(|(s, &tau)| softmax_with_temperature(s, tau))
        .collect::<Result<_>>()?;
    let t = probs.len() as f64;
    match mode {
        ProbMode::AvgVec => {
            let mut out = vec![0.0; k];
            for p in &probs {
                for (o, &x) in out.iter_mut().zip(p) {
                    *o += x;
                }
            }
            for o in &mut out {
                *o /= t;
            }
            Ok(out)
        }
        ProbMode::SeqStats => {
            let mut out = Vec::with_capacity(4 * k);
            for r in 0..k {
                let column: Vec<f64> = probs.iter().map(|p| p[r]).collect();
                let mean = column.iter().sum::<f64>() / t;
                let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t;
                let min = column.iter().copied().fold(f64::INFINITY, f64::min);
                let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                out.extend_from_slice(&[mean, var.sqrt(), min, max]);
            }
            Ok(out)
        }
    }
}

/// Arithmetic mean over a non-empty sequence of equal-length vectors.
pub fn pool_embedding(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| CoreError::InvalidInput("pooling an empty sequence".into()))?;
    let d = first.len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(CoreError::InvalidInput("ragged embedding sequence".into()));
    }
    let mut out = vec![0.0; d];
    for v in vectors {
        for (o, &x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    for o in &mut out {
        *o /= vectors.len() as f64;
    }
    Ok(out)
}

/// Length ratio T'/U for the best hypothesis.
pub fn avg_token_duration(record: &DecodeRecord) -> Result<f64> {
    let u = record.nbest.best().token_count();
    if u == 0 {
        return Err(CoreError::InvalidInput("zero-length hypothesis".into()));
    }
    Ok(record.enc_frames as f64 / u as f64)
}

/// Record-derived quantities the classifier consumes: everything constant
/// under the trainable heads. Step logits are already truncated to the
/// spec's K and sorted descending.
#[derive(Clone, Debug)]
pub struct FeatureInputs {
    pub comp_norm: Vec<[f64; 4]>,
    pub combined_norm: Vec<f64>,
    pub step_logits: Vec<Vec<f64>>,
    pub dec_embed: Vec<Vec<f64>>,
    pub pooled_enc: Vec<f64>,
    pub pooled_dec: Vec<f64>,
    pub avg_dur: f64,
}

impl FeatureInputs {
    pub fn from_record(record: &DecodeRecord, spec: &FeatureSpec) -> Result<Self> {
        spec.validate()?;
        let hyps = record.nbest.hypotheses();
        let mut comp_norm = Vec::with_capacity(hyps.len());
        let mut combined_norm = Vec::with_capacity(hyps.len());
        for h in hyps {
            let u = h.token_count();
            let [c, a, g, r] = h.component_scores();
            comp_norm.push([
                normalize_score(c, u)?,
                normalize_score(a, u)?,
                normalize_score(g, u)?,
                normalize_score(r, u)?,
            ]);
            combined_norm.push(normalize_score(h.combined, u)?);
        }
        let best = record.nbest.best();

        let needs_steps = spec.has_family("entropy") || spec.has_family("prob_summary");
        let mut step_logits = Vec::with_capacity(best.step_topk.len());
        if !best.step_topk.is_empty() {
            let width = best.step_topk[0].len();
            if needs_steps && width < spec.top_k {
                return Err(CoreError::Extraction(format!(
                    "spec wants top-{} step logits but the record captured {width}",
                    spec.top_k
                )));
            }
            for step in &best.step_topk {
                if step.len() != width {
                    return Err(CoreError::Extraction(
                        "ragged captured step lists".into(),
                    ));
                }
                step_logits.push(
                    step.iter()
                        .take(spec.top_k.min(width))
                        .map(|&(_, v)| v)
                        .collect(),
                );
            }
        } else if needs_steps {
            return Err(CoreError::Extraction(
                "record carries no captured step logits for the best hypothesis".into(),
            ));
        }

        let dec_embed = best.step_dec_embed.clone();
        if (spec.has_family("dec_embed")) && dec_embed.is_empty() {
            return Err(CoreError::Extraction(
                "record carries no decoder embeddings for the best hypothesis".into(),
            ));
        }
        let pooled_enc = if record.enc_embed.is_empty() {
            if spec.has_family("enc_embed") {
                return Err(CoreError::Extraction(
                    "record carries no encoder embeddings".into(),
                ));
            }
            Vec::new()
        } else {
            pool_embedding(&record.enc_embed)?
        };
        let pooled_dec = if dec_embed.is_empty() {
            Vec::new()
        } else {
            pool_embedding(&dec_embed)?
        };
        if spec.has_family("enc_embed") && pooled_enc.len() != spec.embed_dim {
            return Err(CoreError::Extraction(format!(
                "encoder embedding dim {} does not match spec {}",
                pooled_enc.len(),
                spec.embed_dim
            )));
        }
        if spec.has_family("dec_embed") && pooled_dec.len() != spec.embed_dim {
            return Err(CoreError::Extraction(format!(
                "decoder embedding dim {} does not match spec {}",
                pooled_dec.len(),
                spec.embed_dim
            )));
        }

        Ok(Self {
            comp_norm,
            combined_norm,
            step_logits,
            dec_embed,
            pooled_enc,
            pooled_dec,
            avg_dur: avg_token_duration(record)?,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.step_logits.len()
    }

    /// Hypothesis index feeding n-best position i (worst replicated).
    pub fn hyp_index(&self, i: usize) -> usize {
        i.min(self.comp_norm.len() - 1)
    }
}

/// Head-free feature values in spec order: unit temperature, decoder-time
/// combination weights.
pub(crate) fn assemble_base_values(inputs: &FeatureInputs, spec: &FeatureSpec) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(spec.dim());
    let taus = vec![1.0; inputs.n_steps()];
    for family in &spec.families {
        match family {
            FeatureFamily::WeightedScore => values.push(inputs.combined_norm[0]),
            FeatureFamily::ComponentScores => values.extend_from_slice(&inputs.comp_norm[0]),
            FeatureFamily::NBestScores { n, mode } => {
                for i in 0..*n {
                    let j = inputs.hyp_index(i);
                    match mode {
                        NBestMode::Weighted => values.push(inputs.combined_norm[j]),
                        NBestMode::PerComponent => values.extend_from_slice(&inputs.comp_norm[j]),
                    }
                }
            }
            FeatureFamily::AvgDur => values.push(inputs.avg_dur),
            FeatureFamily::Entropy => {
                let (_, avg) = token_entropy(&inputs.step_logits, &taus)?;
                values.push(avg);
            }
            FeatureFamily::ProbSummary { mode } => {
                values.extend(prob_summary(&inputs.step_logits, &taus, *mode)?);
            }
            FeatureFamily::EncEmbed => values.extend_from_slice(&inputs.pooled_enc),
            FeatureFamily::DecEmbed => values.extend_from_slice(&inputs.pooled_dec),
        }
    }
    for v in &values {
        if !v.is_finite() {
            return Err(CoreError::Extraction("non-finite feature value".into()));
        }
    }
    Ok(values)
}

/// Concatenate the enabled families in spec order with stable names.
pub fn assemble_features(record: &DecodeRecord, spec: &FeatureSpec) -> Result<FeatureVector> {
    let inputs = FeatureInputs::from_record(record, spec)?;
    let values = assemble_base_values(&inputs, spec)?;
    let names = spec.feature_names();
    debug_assert_eq!(names.len(), values.len());
    Ok(FeatureVector { names, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_basics() {
        assert_eq!(normalize_score(-12.0, 4).unwrap(), -3.0);
        assert_eq!(normalize_score(-7.5, 1).unwrap(), -7.5);
        assert_eq!(normalize_score(0.0, 9).unwrap(), 0.0);
        assert!(normalize_score(1.0, 0).is_err());
    }

    #[test]
    fn softmax_temperature() {
        let p = softmax_with_temperature(&[2.0f64.ln(), 0.0, 0.0], 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!((p[2] - 0.25).abs() < 1e-12);

        let hot = softmax_with_temperature(&[3.0, -1.0, 0.5], 1e9).unwrap();
        for &x in &hot {
            assert!((x - 1.0 / 3.0).abs() < 1e-6);
        }
        assert!(softmax_with_temperature(&[1.0], 0.0).is_err());
        assert!(softmax_with_temperature(&[1.0], -2.0).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax_with_temperature(&[5.0, 4.0, -3.0, 0.0, 2.2], 0.37).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_cases() {
        // uniform over 20: ln 20
        let logits = vec![0.0; 20];
        let (ents, avg) = token_entropy(&[logits], &[1.0]).unwrap();
        assert!((ents[0] - 20.0f64.ln()).abs() < 1e-12);
        assert!((avg - 20.0f64.ln()).abs() < 1e-12);

        // near one-hot: entropy ~ 0
        let (_, avg) = token_entropy(&[vec![200.0, 0.0, 0.0]], &[1.0]).unwrap();
        assert!(avg.abs() < 1e-12);

        // hand value: logits (ln2, 0, 0) at tau 1 -> 1.5 ln 2
        let (_, avg) = token_entropy(&[vec![2.0f64.ln(), 0.0, 0.0]], &[1.0]).unwrap();
        assert!((avg - 1.5 * 2.0f64.ln()).abs() < 1e-12);

        // single logit: K = 1 gives H = 0
        let (ents, _) = token_entropy(&[vec![3.7]], &[1.0]).unwrap();
        assert_eq!(ents[0], 0.0);
    }

    #[test]
    fn entropy_monotone_in_temperature() {
        let logits = vec![2.0, 0.5, -1.0, 0.0];
        let mut last = -1.0;
        for i in 0..40 {
            let tau = 0.1 + (10.0 - 0.1) * (i as f64) / 39.0;
            let (_, h) = token_entropy(&[logits.clone()], &[tau]).unwrap();
            assert!(h >= last - 1e-12, "entropy dipped at tau {tau}");
            last = h;
        }
    }

    #[test]
    fn prob_summary_constant_sequence() {
        let step = vec![1.0, 0.0, -1.0];
        let steps = vec![step.clone(), step.clone(), step];
        let taus = vec![1.0; 3];
        let stats = prob_summary(&steps, &taus, ProbMode::SeqStats).unwrap();
        for r in 0..3 {
            let (mean, std, min, max) = (stats[4 * r], stats[4 * r + 1], stats[4 * r + 2], stats[4 * r + 3]);
            assert!(std.abs() < 1e-15);
            assert_eq!(mean, min);
            assert_eq!(mean, max);
        }
    }

    #[test]
    fn prob_summary_two_steps_hand_arithmetic() {
        // probabilities (0.5, 0.5) and (0.75, 0.25) by construction
        let s1 = vec![0.0, 0.0];
        let s2 = vec![3.0f64.ln(), 0.0];
        let avg = prob_summary(&[s1.clone(), s2.clone()], &[1.0, 1.0], ProbMode::AvgVec).unwrap();
        assert!((avg[0] - 0.625).abs() < 1e-12);
        assert!((avg[1] - 0.375).abs() < 1e-12);
        let stats = prob_summary(&[s1, s2], &[1.0, 1.0], ProbMode::SeqStats).unwrap();
        assert!((stats[0] - 0.625).abs() < 1e-12); // rank-1 mean
        assert!((stats[1] - 0.125).abs() < 1e-12); // rank-1 std (population)
        assert!((stats[2] - 0.5).abs() < 1e-12); // rank-1 min
        assert!((stats[3] - 0.75).abs() < 1e-12); // rank-1 max
    }

    #[test]
    fn pooling() {
        assert_eq!(
            pool_embedding(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            vec![2.0, 3.0]
        );
        assert_eq!(pool_embedding(&[vec![5.0, 6.0]]).unwrap(), vec![5.0, 6.0]);
        assert!(pool_embedding(&[]).is_err());
    }

    #[test]
    fn names_depend_only_on_spec() {
        let spec = FeatureSpec {
            families: vec![
                FeatureFamily::NBestScores {
                    n: 3,
                    mode: NBestMode::Weighted,
                },
                FeatureFamily::Entropy,
                FeatureFamily::ProbSummary {
                    mode: ProbMode::SeqStats,
                },
            ],
            top_k: 2,
            embed_dim: 4,
        };
        let names = spec.feature_names();
        assert_eq!(names.len(), 3 + 1 + 8);
        assert_eq!(names[0], "nbest_w_01");
        assert_eq!(names[3], "ent");
        assert_eq!(names[4], "prob_r01_mean");
        assert_eq!(spec.dim(), names.len());
    }

    #[test]
    fn spec_validation() {
        let empty = FeatureSpec {
            families: vec![],
            top_k: 4,
            embed_dim: 4,
        };
        assert!(empty.validate().is_err());
        let dup = FeatureSpec {
            families: vec![FeatureFamily::Entropy, FeatureFamily::Entropy],
            top_k: 4,
            embed_dim: 4,
        };
        assert!(dup.validate().is_err());
    }
}
