//! CTC label-sequence scoring: the log-probability that the frame-level
//! emissions collapse (repeats merged, then blanks removed) to exactly a
//! given prefix.
//!
//! The forward recursion is kept in an incremental per-prefix state so beam
//! search can extend a scored prefix by one token in O(T'). The standalone
//! [`ctc_prefix_score`] folds the same extension step over the whole prefix,
//! which makes stored hypothesis scores bit-identical to recomputation.

use super::vocab::TokenId;
use crate::logsum::{is_log_zero, log_add, log_softmax, LOG_ZERO};
use crate::{CoreError, Result};

/// Forward state for one prefix over T' frames.
///
/// `nb[t]` = log P(frames 1..t collapse to exactly the prefix and frame t
/// belongs to the final non-blank run); `b[t]` = same but frame t is blank.
/// Index 0 is the zero-frame base case.
#[derive(Clone, Debug)]
pub struct CtcPrefixState {
    nb: Vec<f64>,
    b: Vec<f64>,
    last: Option<TokenId>,
}

impl CtcPrefixState {
    /// State of the empty prefix: only all-blank frame strings qualify.
    pub fn empty(frame_log_probs: &[Vec<f64>], blank: TokenId) -> Self {
        let t_max = frame_log_probs.len();
        let mut b = Vec::with_capacity(t_max + 1);
        b.push(0.0);
        for t in 0..t_max {
            let prev = b[t];
            b.push(prev + frame_log_probs[t][blank as usize]);
        }
        Self {
            nb: vec![LOG_ZERO; t_max + 1],
            b,
            last: None,
        }
    }

    /// State after appending one non-blank token to the prefix.
    pub fn extend(&self, frame_log_probs: &[Vec<f64>], blank: TokenId, token: TokenId) -> Self {
        let t_max = frame_log_probs.len();
        let mut nb = vec![LOG_ZERO; t_max + 1];
        let mut b = vec![LOG_ZERO; t_max + 1];
        let same_as_last = self.last == Some(token);
        for t in 1..=t_max {
            let lp = &frame_log_probs[t - 1];
            // Enter or continue the new token's run: continue it, start it
            // after a blank, or start it directly after the previous run
            // (forbidden for a repeated symbol, which must cross a blank).
            let mut acc = log_add(nb[t - 1], self.b[t - 1]);
            if !same_as_last {
                acc = log_add(acc, self.nb[t - 1]);
            }
            nb[t] = lp[token as usize] + acc;
            b[t] = lp[blank as usize] + log_add(b[t - 1], nb[t - 1]);
        }
        Self {
            nb,
            b,
            last: Some(token),
        }
    }

    /// log P(all T' frames collapse to exactly this prefix).
    pub fn score(&self) -> f64 {
        let s = log_add(*self.nb.last().unwrap(), *self.b.last().unwrap());
        if is_log_zero(s) {
            LOG_ZERO
        } else {
            s
        }
    }
}

/// log Σ over all length-T' frame alignments that collapse to `prefix`.
///
/// `frame_logits` rows are unnormalized; each row is log-softmaxed here.
/// Returns the [`LOG_ZERO`] sentinel when the prefix needs more frames than
/// are available.
pub fn ctc_prefix_score(
    prefix: &[TokenId],
    frame_logits: &[Vec<f64>],
    blank: TokenId,
) -> Result<f64> {
    if frame_logits.is_empty() {
        return Err(CoreError::InvalidInput(
            "CTC needs at least one frame".into(),
        ));
    }
    let width = frame_logits[0].len();
    if (blank as usize) >= width {
        return Err(CoreError::InvalidInput(format!(
            "blank id {blank} out of range for {width} logits"
        )));
    }
    for (t, row) in frame_logits.iter().enumerate() {
        if row.len() != width {
            return Err(CoreError::InvalidInput(format!(
                "ragged frame logits: row {t} has {} entries, expected {width}",
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "non-finite logit in frame {t}"
            )));
        }
    }
    for &tok in prefix {
        if tok == blank {
            return Err(CoreError::InvalidInput(
                "prefix must not contain the blank token".into(),
            ));
        }
        if (tok as usize) >= width {
            return Err(CoreError::InvalidInput(format!(
                "token id {tok} out of range for {width} logits"
            )));
        }
    }

    let lp: Vec<Vec<f64>> = frame_logits.iter().map(|row| log_softmax(row)).collect();
    let mut state = CtcPrefixState::empty(&lp, blank);
    for &tok in prefix {
        state = state.extend(&lp, blank, tok);
    }
    Ok(state.score())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logsum::LOG_ZERO_THRESHOLD;

    // vocab layout for these tests: a=0, b=1, blank=2, eos=3
    const BLANK: TokenId = 2;

    fn lp(frame_logits: &[Vec<f64>]) -> Vec<Vec<f64>> {
        frame_logits.iter().map(|r| log_softmax(r)).collect()
    }

    #[test]
    fn single_frame_single_alignment() {
        let logits = vec![vec![1.0, -0.5, 0.2, -2.0]];
        let got = ctc_prefix_score(&[0], &logits, BLANK).unwrap();
        let expect = lp(&logits)[0][0];
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn infeasible_prefix_is_log_zero() {
        let logits = vec![vec![1.0, -0.5, 0.2, -2.0]];
        let got = ctc_prefix_score(&[0, 1], &logits, BLANK).unwrap();
        assert!(got <= LOG_ZERO_THRESHOLD);
    }

    #[test]
    fn two_frames_three_alignments() {
        let logits = vec![vec![0.3, -1.0, 0.8, 0.1], vec![-0.2, 0.5, 0.4, -0.7]];
        let p = lp(&logits);
        let expect = ((p[0][0] + p[1][0]).exp()
            + (p[0][0] + p[1][2]).exp()
            + (p[0][2] + p[1][0]).exp())
        .ln();
        let got = ctc_prefix_score(&[0], &logits, BLANK).unwrap();
        assert!(
            (got - expect).abs() <= 1e-12 * expect.abs().max(1.0),
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn empty_prefix_is_all_blank_mass() {
        let logits = vec![vec![0.3, -1.0, 0.8, 0.1], vec![-0.2, 0.5, 0.4, -0.7]];
        let p = lp(&logits);
        let got = ctc_prefix_score(&[], &logits, BLANK).unwrap();
        assert!((got - (p[0][2] + p[1][2])).abs() < 1e-14);
    }

    #[test]
    fn repeated_token_needs_separating_blank() {
        // Two frames cannot realize "aa": the run must break on a blank.
        let logits = vec![vec![2.0, 0.0, 0.1, -1.0], vec![2.0, 0.0, 0.1, -1.0]];
        let got = ctc_prefix_score(&[0, 0], &logits, BLANK).unwrap();
        assert!(got <= LOG_ZERO_THRESHOLD);

        // Three frames: exactly one alignment, a - a.
        let logits3 = vec![
            vec![2.0, 0.0, 0.1, -1.0],
            vec![0.0, 0.0, 1.5, -1.0],
            vec![2.0, 0.0, 0.1, -1.0],
        ];
        let p = lp(&logits3);
        let got3 = ctc_prefix_score(&[0, 0], &logits3, BLANK).unwrap();
        let expect = p[0][0] + p[1][2] + p[2][0];
        assert!((got3 - expect).abs() < 1e-13);
    }

    #[test]
    fn rejects_blank_in_prefix_and_bad_logits() {
        let logits = vec![vec![0.0, 0.0, 0.0, 0.0]];
        assert!(matches!(
            ctc_prefix_score(&[BLANK], &logits, BLANK),
            Err(CoreError::InvalidInput(_))
        ));
        let bad = vec![vec![0.0, f64::NAN, 0.0, 0.0]];
        assert!(matches!(
            ctc_prefix_score(&[0], &bad, BLANK),
            Err(CoreError::InvalidInput(_))
        ));
        assert!(ctc_prefix_score(&[0], &[], BLANK).is_err());
    }

    #[test]
    fn incremental_state_matches_standalone() {
        let logits = vec![
            vec![0.4, -0.3, 0.2, 0.9],
            vec![-0.1, 0.6, -0.5, 0.3],
            vec![0.7, 0.1, 0.2, -0.8],
        ];
        let p = lp(&logits);
        let mut state = CtcPrefixState::empty(&p, BLANK);
        for &tok in &[1u32, 0u32] {
            state = state.extend(&p, BLANK, tok);
        }
        let standalone = ctc_prefix_score(&[1, 0], &logits, BLANK).unwrap();
        assert_eq!(state.score().to_bits(), standalone.to_bits());
    }
}
