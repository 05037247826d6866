//! Scalar special functions used by the closed-form weight integrals.

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `erfcx(x) = exp(x^2) * erfc(x)`
/// for `x >= 0`.
///
/// The direct product is accurate while `erfc` stays in the normal range;
/// beyond that the asymptotic expansion
/// `erfcx(x) = 1/(x sqrt(pi)) * sum_n (-1)^n (2n-1)!! / (2x^2)^n`
/// takes over (its truncation error at the switch point is far below
/// f64 resolution).
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "erfcx is only used with nonnegative arguments");
    if x <= 24.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        let inv2x2 = 1.0 / (2.0 * x * x);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..=10u32 {
            term *= -(2.0 * f64::from(n) - 1.0) * inv2x2;
            sum += term;
        }
        sum / (x * core::f64::consts::PI.sqrt())
    }
}
