//! Weighted focal loss. With p_t = p for positives and 1−p for negatives,
//! and α_t the matching class weight: loss = −α_t (1−p_t)^γ log p_t.
//! γ = 0 with α_pos = 0.5 reduces to half the binary cross-entropy.

use crate::{CoreError, Result};

fn validate(p: f64, y: u8, alpha_pos: f64, gamma: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0 && p < 1.0) {
        return Err(CoreError::InvalidInput(format!(
            "probability must lie strictly in (0,1); got {p} (clamp logits, not probabilities)"
        )));
    }
    if y > 1 {
        return Err(CoreError::InvalidInput(format!("label must be 0/1, got {y}")));
    }
    if !(alpha_pos.is_finite() && alpha_pos > 0.0 && alpha_pos < 1.0) {
        return Err(CoreError::InvalidInput(format!(
            "alpha_pos must lie in (0,1); got {alpha_pos}"
        )));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(CoreError::InvalidInput(format!(
            "gamma must be non-negative; got {gamma}"
        )));
    }
    Ok(())
}

pub fn weighted_focal_loss(p: f64, y: u8, alpha_pos: f64, gamma: f64) -> Result<f64> {
    validate(p, y, alpha_pos, gamma)?;
    let (pt, alpha_t) = if y == 1 {
        (p, alpha_pos)
    } else {
        (1.0 - p, 1.0 - alpha_pos)
    };
    let modulator = if gamma == 0.0 {
        1.0
    } else {
        (1.0 - pt).powf(gamma)
    };
    Ok(-alpha_t * modulator * pt.ln())
}

/// dL/dp for the same loss.
pub fn focal_loss_dp(p: f64, y: u8, alpha_pos: f64, gamma: f64) -> Result<f64> {
    validate(p, y, alpha_pos, gamma)?;
    let (pt, alpha_t, dpt_dp) = if y == 1 {
        (p, alpha_pos, 1.0)
    } else {
        (1.0 - p, 1.0 - alpha_pos, -1.0)
    };
    let d_pt = if gamma == 0.0 {
        -alpha_t / pt
    } else {
        -alpha_t * (-gamma * (1.0 - pt).powf(gamma - 1.0) * pt.ln() + (1.0 - pt).powf(gamma) / pt)
    };
    Ok(d_pt * dpt_dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bce(p: f64, y: u8) -> f64 {
        if y == 1 {
            -p.ln()
        } else {
            -(1.0 - p).ln()
        }
    }

    #[test]
    fn gamma_zero_is_half_bce() {
        for &(p, y) in &[(0.1, 1u8), (0.9, 0u8), (0.5, 1u8), (0.73, 0u8)] {
            let focal = weighted_focal_loss(p, y, 0.5, 0.0).unwrap();
            assert!((focal - 0.5 * bce(p, y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn confident_correct_has_vanishing_loss() {
        let l = weighted_focal_loss(1.0 - 1e-12, 1, 0.5, 2.0).unwrap();
        assert!(l < 1e-11);
        let l0 = weighted_focal_loss(1e-12, 0, 0.5, 2.0).unwrap();
        assert!(l0 < 1e-11);
    }

    #[test]
    fn hand_value() {
        // y = 1, p = 0.5, gamma = 2, alpha near 1: 0.25 * ln 2
        let l = weighted_focal_loss(0.5, 1, 1.0 - 1e-12, 2.0).unwrap();
        assert!((l - 0.25 * std::f64::consts::LN_2).abs() < 1e-6);
    }

    #[test]
    fn rejects_saturated_probability() {
        assert!(weighted_focal_loss(0.0, 1, 0.5, 2.0).is_err());
        assert!(weighted_focal_loss(1.0, 1, 0.5, 2.0).is_err());
        assert!(weighted_focal_loss(f64::NAN, 1, 0.5, 2.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let eps = 1e-7;
        for &(p, y, a, g) in &[
            (0.3, 1u8, 0.5, 2.0),
            (0.3, 0u8, 0.5, 2.0),
            (0.8, 1u8, 0.25, 0.0),
            (0.6, 0u8, 0.7, 1.0),
            (0.45, 1u8, 0.62, 3.0),
        ] {
            let analytic = focal_loss_dp(p, y, a, g).unwrap();
            let hi = weighted_focal_loss(p + eps, y, a, g).unwrap();
            let lo = weighted_focal_loss(p - eps, y, a, g).unwrap();
            let numeric = (hi - lo) / (2.0 * eps);
            let denom = (analytic.abs() + numeric.abs()).max(1e-8);
            assert!(
                ((analytic - numeric) / denom).abs() < 1e-6,
                "p={p} y={y}: analytic {analytic}, numeric {numeric}"
            );
        }
    }

    #[test]
    fn loss_non_negative() {
        for i in 1..100 {
            let p = i as f64 / 100.0;
            for y in [0u8, 1u8] {
                assert!(weighted_focal_loss(p, y, 0.34, 2.0).unwrap() >= 0.0);
            }
        }
    }
}
