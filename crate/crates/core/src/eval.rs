//! Evaluation: sequence labels, edit-distance CER/SER, ROC/AUC, EER with its
//! operating threshold, and the filtered-CER-versus-threshold curve.
//!
//! Acceptance is score ≥ threshold, so the all-accept point is reachable at
//! the minimum score. EER is linearly interpolated in (FAR, FRR) between
//! adjacent operating points when no exact crossing exists.

use crate::toy_asr::{DecodeRecord, TokenId};
use crate::{CoreError, Result};
use serde::Serialize;

/// Minimal-edit alignment counts plus edit-distance CER.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EditCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn total(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Unit-cost edit alignment between reference and hypothesis. When costs tie,
/// substitution is preferred over insertion over deletion.
pub fn edit_counts(reference: &[TokenId], hypothesis: &[TokenId]) -> EditCounts {
    let m = reference.len();
    let n = hypothesis.len();
    // cell = (cost, S, D, I); column j walks the hypothesis
    let mut prev: Vec<(usize, usize, usize, usize)> = (0..=n).map(|j| (j, 0, 0, j)).collect();
    let mut curr = vec![(0usize, 0usize, 0usize, 0usize); n + 1];
    for i in 1..=m {
        curr[0] = (i, 0, i, 0);
        for j in 1..=n {
            let hit = reference[i - 1] == hypothesis[j - 1];
            let diag = prev[j - 1];
            let sub = (
                diag.0 + usize::from(!hit),
                diag.1 + usize::from(!hit),
                diag.2,
                diag.3,
            );
            let ins = (curr[j - 1].0 + 1, curr[j - 1].1, curr[j - 1].2, curr[j - 1].3 + 1);
            let del = (prev[j].0 + 1, prev[j].1, prev[j].2 + 1, prev[j].3);
            // preference order at equal cost: substitution, insertion, deletion
            let mut best = sub;
            if ins.0 < best.0 {
                best = ins;
            }
            if del.0 < best.0 {
                best = del;
            }
            curr[j] = best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let (_, s, d, i) = prev[n];
    EditCounts {
        substitutions: s,
        deletions: d,
        insertions: i,
    }
}

/// (S, D, I, CER) with CER = (S+D+I)/|reference|. Empty reference is an
/// error; the caller decides policy there.
pub fn edit_distance_cer(
    reference: &[TokenId],
    hypothesis: &[TokenId],
) -> Result<(usize, usize, usize, f64)> {
    if reference.is_empty() {
        return Err(CoreError::UndefinedCer);
    }
    let c = edit_counts(reference, hypothesis);
    let cer = c.total() as f64 / reference.len() as f64;
    Ok((c.substitutions, c.deletions, c.insertions, cer))
}

/// 1 iff the best hypothesis (eos stripped) equals the reference exactly.
pub fn label_record(record: &DecodeRecord) -> u8 {
    u8::from(record.nbest.best().content_tokens() == record.reference.as_slice())
}

/// One ROC operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

fn check_two_classes(labels: &[u8]) -> Result<(usize, usize)> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CoreError::InvalidInput(format!(
            "need both classes: {n_pos} positive, {n_neg} negative"
        )));
    }
    Ok((n_pos, n_neg))
}

/// ROC by sweeping all distinct score thresholds; AUC by trapezoidal
/// integration. Equals P(s_pos > s_neg) + 0.5 P(s_pos = s_neg).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<(Vec<RocPoint>, f64)> {
    if scores.len() != labels.len() {
        return Err(CoreError::InvalidInput(
            "scores and labels length mismatch".into(),
        ));
    }
    let (n_pos, n_neg) = check_two_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        // consume the whole tie group at this score
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((points, auc))
}

/// EER and its operating threshold. FAR(t) = accepted negatives / negatives,
/// FRR(t) = rejected positives / positives, accept ⟺ score ≥ t.
pub fn eer(scores: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(CoreError::InvalidInput(
            "scores and labels length mismatch".into(),
        ));
    }
    let (n_pos, n_neg) = check_two_classes(labels)?;

    // Operating points at every distinct score (ascending), plus the
    // all-reject point above the maximum.
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut ops: Vec<(f64, f64, f64)> = Vec::with_capacity(distinct.len() + 1); // (t, far, frr)
    for &t in &distinct {
        let accepted_neg = scores
            .iter()
            .zip(labels)
            .filter(|&(&s, &y)| y == 0 && s >= t)
            .count();
        let rejected_pos = scores
            .iter()
            .zip(labels)
            .filter(|&(&s, &y)| y == 1 && s < t)
            .count();
        ops.push((
            t,
            accepted_neg as f64 / n_neg as f64,
            rejected_pos as f64 / n_pos as f64,
        ));
    }
    let t_top = distinct.last().unwrap() + 1.0;
    ops.push((t_top, 0.0, 1.0));

    // FAR is nonincreasing and FRR nondecreasing in t, so FAR−FRR crosses
    // zero exactly once.
    for i in 0..ops.len() {
        let (t, far, frr) = ops[i];
        let diff = far - frr;
        if diff == 0.0 {
            return Ok((far, t));
        }
        if diff < 0.0 {
            if i == 0 {
                return Ok((far.max(frr), t));
            }
            let (t0, fa0, fr0) = ops[i - 1];
            let (t1, fa1, fr1) = ops[i];
            let denom = (fr1 - fr0) - (fa1 - fa0);
            let x = if denom.abs() < 1e-300 {
                0.0
            } else {
                (fa0 - fr0) / denom
            };
            let eer_value = fa0 + x * (fa1 - fa0);
            let threshold = t0 + x * (t1 - t0);
            return Ok((eer_value, threshold));
        }
    }
    // Unreachable: FAR−FRR is +1 at the minimum score and −1 at the
    // all-reject point, so a crossing always exists.
    Err(CoreError::NumericFailure {
        block: "eer".into(),
        detail: "no FAR/FRR crossing found".into(),
    })
}

/// One point of the filtered-CER curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub filtered_cer: f64,
    pub n_kept: usize,
}

/// Corpus CER over the records whose confidence clears each threshold.
/// Thresholds must be strictly increasing; thresholds that keep nothing are
/// omitted.
pub fn filtered_cer_curve(
    confidences: &[f64],
    records: &[DecodeRecord],
    thresholds: &[f64],
) -> Result<Vec<CurvePoint>> {
    if confidences.len() != records.len() {
        return Err(CoreError::InvalidInput(
            "confidences and records length mismatch".into(),
        ));
    }
    for pair in thresholds.windows(2) {
        if pair[0] >= pair[1] {
            return Err(CoreError::InvalidInput(
                "thresholds must be strictly increasing".into(),
            ));
        }
    }
    let mut curve = Vec::new();
    for &t in thresholds {
        let mut edits = 0usize;
        let mut ref_tokens = 0usize;
        let mut kept = 0usize;
        for (c, rec) in confidences.iter().zip(records) {
            if *c >= t {
                kept += 1;
                edits += edit_counts(&rec.reference, rec.nbest.best().content_tokens()).total();
                ref_tokens += rec.reference.len();
            }
        }
        if kept == 0 {
            continue;
        }
        let cer = if ref_tokens == 0 {
            0.0
        } else {
            edits as f64 / ref_tokens as f64
        };
        curve.push(CurvePoint {
            threshold: t,
            filtered_cer: cer,
            n_kept: kept,
        });
    }
    Ok(curve)
}

/// Corpus (CER, SER): pooled edits over pooled reference tokens, and the
/// fraction of records whose best hypothesis misses the reference.
pub fn corpus_metrics(records: &[DecodeRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(CoreError::InvalidInput(
            "corpus metrics of empty record set".into(),
        ));
    }
    let mut edits = 0usize;
    let mut ref_tokens = 0usize;
    let mut wrong = 0usize;
    for rec in records {
        edits += edit_counts(&rec.reference, rec.nbest.best().content_tokens()).total();
        ref_tokens += rec.reference.len();
        if label_record(rec) == 0 {
            wrong += 1;
        }
    }
    let cer = if ref_tokens == 0 {
        0.0
    } else {
        edits as f64 / ref_tokens as f64
    };
    Ok((cer, wrong as f64 / records.len() as f64))
}

/// Full evaluation bundle for one decode log.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub eer: f64,
    pub eer_threshold: f64,
    pub auc: f64,
    pub cer: f64,
    pub ser: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub curve: Vec<CurvePoint>,
}

pub fn evaluate(
    records: &[DecodeRecord],
    confidences: &[f64],
    labels: &[u8],
    thresholds: &[f64],
) -> Result<EvalReport> {
    if records.len() != confidences.len() || records.len() != labels.len() {
        return Err(CoreError::InvalidInput(
            "records, confidences, labels length mismatch".into(),
        ));
    }
    let (n_pos, n_neg) = check_two_classes(labels)?;
    let (_, auc) = roc_auc(confidences, labels)?;
    let (eer_value, threshold) = eer(confidences, labels)?;
    let (cer, ser) = corpus_metrics(records)?;
    let curve = filtered_cer_curve(confidences, records, thresholds)?;
    Ok(EvalReport {
        eer: eer_value,
        eer_threshold: threshold,
        auc,
        cer,
        ser,
        n_pos,
        n_neg,
        curve,
    })
}
