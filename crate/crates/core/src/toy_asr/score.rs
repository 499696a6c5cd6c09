//! Score combination: the four-component weighted hypothesis score used for
//! ranking, and the two-term multi-task training loss.

use crate::{CoreError, Result};
use serde::{Deserialize, Serialize};

const WEIGHT_TOL: f64 = 1e-9;

/// Component weights (λ1..λ4) with λ1+λ2 = 1 and λ3+λ4 = 1, each in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombineWeights {
    pub ctc: f64,
    pub att: f64,
    pub ngram: f64,
    pub rnnlm: f64,
}

impl CombineWeights {
    pub fn new(ctc: f64, att: f64, ngram: f64, rnnlm: f64) -> Result<Self> {
        for (name, w) in [("λ1", ctc), ("λ2", att), ("λ3", ngram), ("λ4", rnnlm)] {
            if !(w.is_finite() && (0.0..=1.0).contains(&w)) {
                return Err(CoreError::InvalidWeights(format!(
                    "{name} = {w} outside [0, 1]"
                )));
            }
        }
        if (ctc + att - 1.0).abs() > WEIGHT_TOL {
            return Err(CoreError::InvalidWeights(format!(
                "λ1 + λ2 = {} must equal 1",
                ctc + att
            )));
        }
        if (ngram + rnnlm - 1.0).abs() > WEIGHT_TOL {
            return Err(CoreError::InvalidWeights(format!(
                "λ3 + λ4 = {} must equal 1",
                ngram + rnnlm
            )));
        }
        Ok(Self {
            ctc,
            att,
            ngram,
            rnnlm,
        })
    }

    pub fn combine(&self, a_ctc: f64, a_att: f64, a_ngram: f64, a_rnnlm: f64) -> f64 {
        self.ctc * a_ctc + self.att * a_att + self.ngram * a_ngram + self.rnnlm * a_rnnlm
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.ctc, self.att, self.ngram, self.rnnlm]
    }
}

impl Default for CombineWeights {
    /// Standard decoding weights: 0.5/0.5 acoustic, 0.8/0.2 language.
    fn default() -> Self {
        Self {
            ctc: 0.5,
            att: 0.5,
            ngram: 0.8,
            rnnlm: 0.2,
        }
    }
}

/// λ1·α_ctc + λ2·α_att + λ3·α_ngram + λ4·α_rnnlm with validated weights.
pub fn combine_hypothesis_score(
    a_ctc: f64,
    a_att: f64,
    a_ngram: f64,
    a_rnnlm: f64,
    l1: f64,
    l2: f64,
    l3: f64,
    l4: f64,
) -> Result<f64> {
    let w = CombineWeights::new(l1, l2, l3, l4)?;
    Ok(w.combine(a_ctc, a_att, a_ngram, a_rnnlm))
}

/// λ·l_ctc + (1−λ)·l_att.
pub fn mtl_loss(l_ctc: f64, l_att: f64, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && (0.0..=1.0).contains(&lambda)) {
        return Err(CoreError::InvalidInput(format!(
            "mtl lambda = {lambda} outside [0, 1]"
        )));
    }
    Ok(lambda * l_ctc + (1.0 - lambda) * l_att)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_weights_combine() {
        let w = CombineWeights::default();
        let s = w.combine(-4.0, -2.0, -8.0, -6.0);
        assert!((s - (0.5 * -4.0 + 0.5 * -2.0 + 0.8 * -8.0 + 0.2 * -6.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_components_double() {
        // pairwise weights each sum to 1, so equal components c give 2c
        let s = combine_hypothesis_score(3.5, 3.5, 3.5, 3.5, 0.3, 0.7, 0.9, 0.1).unwrap();
        assert!((s - 7.0).abs() < 1e-12);
        let z = combine_hypothesis_score(0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.8, 0.2).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn constraint_violations_rejected() {
        assert!(matches!(
            combine_hypothesis_score(0.0, 0.0, 0.0, 0.0, 0.6, 0.6, 0.8, 0.2),
            Err(CoreError::InvalidWeights(_))
        ));
        assert!(CombineWeights::new(1.2, -0.2, 0.5, 0.5).is_err());
        assert!(CombineWeights::new(0.5, 0.5, 0.5, 0.6).is_err());
    }

    #[test]
    fn mtl_endpoints() {
        assert_eq!(mtl_loss(2.0, 4.0, 1.0).unwrap(), 2.0);
        assert_eq!(mtl_loss(2.0, 4.0, 0.0).unwrap(), 4.0);
        assert!((mtl_loss(2.0, 4.0, 0.5).unwrap() - 3.0).abs() < 1e-15);
        assert!(mtl_loss(1.0, 1.0, 1.5).is_err());
    }
}
