//! Regret-bound evaluators with the guarantees' exact printed constants.
//!
//! Each function evaluates the right-hand side of one guarantee from the
//! quantities a run actually produced; experiment traces report the
//! bound next to the measured regret and tests assert nonnegative slack.

/// `ln(max(e, x))`, flagging when the clamp was active. The scale-free
/// expert bound contains an iterated logarithm of the cumulative scale
/// ratio, which is undefined for tiny sums; clamping the inner argument
/// at `e` only ever enlarges the bound.
#[derive(Debug, Clone, Copy)]
pub struct ClampedLn {
    pub value: f64,
    pub clamped: bool,
}

pub fn clamped_ln(x: f64) -> ClampedLn {
    if x >= core::f64::consts::E {
        ClampedLn {
            value: x.ln(),
            clamped: false,
        }
    } else {
        ClampedLn {
            value: 1.0,
            clamped: true,
        }
    }
}

/// `max(0, log2(x))`.
pub fn log2_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.log2()
    } else {
        0.0
    }
}

/// Complexity term of the scale-free expert guarantee:
/// `Gamma = KL + ln( ln(S) + 1/2 + ln(2 + S) )` where
/// `S = sum_{t=1}^{T-1} b_t / B_t` (iterated log clamped as above).
pub fn squint_scale_free_factor(kl: f64, ratio_sum_before_last: f64) -> (f64, bool) {
    let inner = clamped_ln(ratio_sum_before_last);
    let gamma = kl + (inner.value + 0.5 + (2.0 + ratio_sum_before_last).ln()).ln();
    (gamma, inner.clamped)
}

/// Scale-free expert bound:
/// `2 sqrt(V) (1 + sqrt(2 Gamma)) + 10 B_T (Gamma + ln 2) + 4 B_T`.
pub fn squint_scale_free_bound(variance: f64, gamma: f64, scale_max: f64) -> f64 {
    2.0 * variance.max(0.0).sqrt() * (1.0 + (2.0 * gamma).sqrt())
        + 10.0 * scale_max * (gamma + core::f64::consts::LN_2)
        + 4.0 * scale_max
}

/// Complexity term of the fixed-scale optimization guarantee:
/// `C_T = d ln(1 + (2 sum_{t<T} b_t^2 + 2 B_{T-1}^2) / (25 d B_{T-1}^2))
///        + 2 ln(log2+(sqrt(sum_{t<=T} b_t^2) / B) + 3) + 2`.
pub fn metagrad_fixed_scale_factor(
    dimension: usize,
    sum_sq_before_last: f64,
    prev_scale_max: f64,
    sum_sq_total: f64,
    initial_scale: f64,
) -> f64 {
    let d = dimension as f64;
    let b2 = prev_scale_max * prev_scale_max;
    d * (1.0 + (2.0 * sum_sq_before_last + 2.0 * b2) / (25.0 * d * b2)).ln()
        + 2.0 * (log2_plus(sum_sq_total.max(0.0).sqrt() / initial_scale) + 3.0).ln()
        + 2.0
}

/// Fixed-scale clipped pseudo-regret bound:
/// `3 sqrt(Vbar C_T) + 15 B_T C_T`.
pub fn metagrad_fixed_scale_bound(clipped_variance: f64, factor: f64, scale_max: f64) -> f64 {
    3.0 * (clipped_variance.max(0.0) * factor).sqrt() + 15.0 * scale_max * factor
}

/// Complexity term of the scale-free optimization guarantee:
/// `Gamma_T = 2 d ln(27/25 + (2/(25 d)) sum_t b_t^2/B_t^2)
///            + 4 ln(log2+(sqrt(sum_t (sum_{s<=t} b_s/B_s)^2)) + 3) + 4`.
pub fn metagrad_scale_free_factor(
    dimension: usize,
    sum_sq_ratios: f64,
    sum_sq_prefix_ratios: f64,
) -> f64 {
    let d = dimension as f64;
    2.0 * d * (27.0 / 25.0 + 2.0 / (25.0 * d) * sum_sq_ratios).ln()
        + 4.0 * (log2_plus(sum_sq_prefix_ratios.max(0.0).sqrt()) + 3.0).ln()
        + 4.0
}

/// Scale-free pseudo-regret bound: `3 sqrt(V Gamma) + 15 B_T Gamma + 4 B_T`.
pub fn metagrad_scale_free_bound(variance: f64, factor: f64, scale_max: f64) -> f64 {
    3.0 * (variance.max(0.0) * factor).sqrt() + 15.0 * scale_max * factor + 4.0 * scale_max
}

/// Complexity term of the ball-reduction guarantee:
/// `Gamma_T = d ln(27/25 + 2 sum_{t<T} b_t^2 / (25 d B_{T-1}^2))
///            + 2 ln(log2+(sqrt(sum_{t<=T} b_t^2) / B) + 3) + 2`.
pub fn reduction_factor(
    dimension: usize,
    sum_sq_before_last: f64,
    prev_scale_max: f64,
    sum_sq_total: f64,
    initial_scale: f64,
) -> f64 {
    let d = dimension as f64;
    let b2 = prev_scale_max * prev_scale_max;
    d * (27.0 / 25.0 + 2.0 * sum_sq_before_last / (25.0 * d * b2)).ln()
        + 2.0 * (log2_plus(sum_sq_total.max(0.0).sqrt() / initial_scale) + 3.0).ln()
        + 2.0
}

/// Ball-reduction pseudo-regret bound:
/// `3 sqrt(V Gamma) + 24 B_T Gamma + B_T`.
pub fn reduction_bound(variance: f64, factor: f64, scale_max: f64) -> f64 {
    3.0 * (variance.max(0.0) * factor).sqrt() + 24.0 * scale_max * factor + scale_max
}

/// Anytime bound of fixed-rate exponential weights:
/// `ln K / eta + eta * t * range^2 / 8`.
pub fn hedge_fixed_eta_bound(experts: usize, eta: f64, rounds: u64, range: f64) -> f64 {
    (experts as f64).ln() / eta + eta * rounds as f64 * range * range / 8.0
}

/// Gradient-norm-adaptive descent bound:
/// `sqrt(2) * D * sqrt(sum_t ||g_t||^2)`.
pub fn ogd_adanorm_bound(diameter: f64, sum_sq_gradients: f64) -> f64 {
    core::f64::consts::SQRT_2 * diameter * sum_sq_gradients.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_ln_kicks_in_below_e() {
        assert!(!clamped_ln(3.0).clamped);
        assert!((clamped_ln(3.0).value - 3.0f64.ln()).abs() < 1e-15);
        let c = clamped_ln(0.5);
        assert!(c.clamped);
        assert_eq!(c.value, 1.0);
        // Clamping never shrinks the bound.
        assert!(clamped_ln(0.5).value >= 0.5f64.ln());
    }

    #[test]
    fn log2_plus_floors_at_zero() {
        assert_eq!(log2_plus(0.5), 0.0);
        assert_eq!(log2_plus(0.0), 0.0);
        assert_eq!(log2_plus(8.0), 3.0);
    }

    #[test]
    fn expert_factor_hand_value() {
        // KL = ln 2, S = 10: Gamma = ln2 + ln(ln 10 + 0.5 + ln 12).
        let (gamma, clamped) = squint_scale_free_factor(2.0f64.ln(), 10.0);
        let expected = 2.0f64.ln() + (10.0f64.ln() + 0.5 + 12.0f64.ln()).ln();
        assert!((gamma - expected).abs() < 1e-15);
        assert!(!clamped);
    }

    #[test]
    fn expert_bound_hand_value() {
        // V = 4, Gamma = 2, B = 1:
        // 2*2*(1 + 2) + 10*(2 + ln 2) + 4 = 12 + 20 + 10 ln 2 + 4.
        let bound = squint_scale_free_bound(4.0, 2.0, 1.0);
        let expected = 12.0 + 20.0 + 10.0 * 2.0f64.ln() + 4.0;
        assert!((bound - expected).abs() < 1e-12);
    }

    #[test]
    fn fixed_scale_factor_hand_value() {
        // d=1, prefix 3, B_{T-1}=2, total 5, B=1:
        // ln(1 + (6+8)/100) + 2 ln(log2(sqrt 5) + 3) + 2.
        let c = metagrad_fixed_scale_factor(1, 3.0, 2.0, 5.0, 1.0);
        let expected =
            (1.0 + 14.0 / 100.0f64).ln() + 2.0 * ((5.0f64.sqrt().log2()) + 3.0).ln() + 2.0;
        assert!((c - expected).abs() < 1e-14);
    }

    #[test]
    fn scale_free_factor_hand_value() {
        // d=2, sum b^2/B^2 = 8, sum prefix^2 = 16:
        // 4 ln(27/25 + 8/25) + 4 ln(log2 4 + 3) + 4.
        let g = metagrad_scale_free_factor(2, 8.0, 16.0);
        let expected = 4.0 * (27.0 / 25.0 + 2.0 / 50.0 * 8.0f64).ln() + 4.0 * 5.0f64.ln() + 4.0;
        assert!((g - expected).abs() < 1e-14);
    }

    #[test]
    fn reduction_factor_hand_value() {
        let g = reduction_factor(3, 12.0, 2.0, 20.0, 0.5);
        let expected = 3.0 * (27.0f64 / 25.0 + 24.0 / (75.0 * 4.0)).ln()
            + 2.0 * (log2_plus(20.0f64.sqrt() / 0.5) + 3.0).ln()
            + 2.0;
        assert!((g - expected).abs() < 1e-14);
    }
}
