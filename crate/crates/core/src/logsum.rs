//! Log-domain arithmetic. Probabilities are carried as natural-log values;
//! zero probability is the finite sentinel [`LOG_ZERO`], which survives
//! additions and comparisons without producing NaN.

/// Sentinel standing in for log(0). Large enough in magnitude that any real
/// score dominates it, small enough that sums of a few sentinels stay finite.
pub const LOG_ZERO: f64 = -1.0e30;

/// Threshold below which a log value is treated as log(0).
pub const LOG_ZERO_THRESHOLD: f64 = -1.0e29;

#[inline]
pub fn is_log_zero(x: f64) -> bool {
    x <= LOG_ZERO_THRESHOLD
}

/// log(exp(a) + exp(b)), stable, sentinel-aware.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if is_log_zero(hi) {
        return LOG_ZERO;
    }
    if is_log_zero(lo) {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// log Σ exp(x_i) over a slice, stable, sentinel-aware.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || is_log_zero(hi) || hi == f64::NEG_INFINITY {
        return LOG_ZERO;
    }
    let sum: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// Per-element log softmax with max subtraction.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logits);
    logits.iter().map(|&x| x - z).collect()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow for large |x|.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let a: f64 = (0.3f64).ln();
        let b: f64 = (0.2f64).ln();
        assert!((log_add(a, b) - 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_add_propagates_zero() {
        assert_eq!(log_add(LOG_ZERO, LOG_ZERO), LOG_ZERO);
        assert!((log_add(LOG_ZERO, -1.5) - (-1.5)).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_normalizes() {
        let lp = log_softmax(&[0.1, -2.0, 3.0, 0.0]);
        let total: f64 = lp.iter().map(|x| x.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softplus_extremes() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(50.0) - 50.0).abs() < 1e-12);
        assert!(softplus(-50.0) > 0.0);
    }
}
