//! Expert aggregation over a continuum of learning rates with clipped
//! losses.
//!
//! The learner maintains, per expert `k`, the clipped cumulative regret
//! `Rbar_k` and clipped variance `Vbar_k`, and plays
//!
//! ```text
//! p_{T+1}(k)  ∝  pi_k * integral_0^{1/(2 B_T)} exp(eta Rbar_k - eta^2 Vbar_k) d eta
//! ```
//!
//! where `B_T` is the running scale maximum. The integral has a closed
//! form in Gaussian error functions ([`exp_quadratic_integral`]); a
//! diagnostic potential ([`Squint::potential`]) evaluated by adaptive
//! quadrature certifies the invariant `Phi_T <= ln(B_{T-1} / B)` that
//! drives the regret guarantee.
//!
//! The upper integration limit shrinks as new scale maxima arrive, which
//! is what keeps every admissible learning rate safe for the *next* round
//! without knowing the loss range in advance.

use serde::{Deserialize, Serialize};

use crate::core::{instantaneous_expert_regrets, LossVector, RegretLedger};
use crate::core::{ComparatorSpec, LedgerMode, ScaleTracker};
use crate::numeric::{softmax, CompensatedSum};
use crate::quadrature::{adaptive_gauss_kronrod, gauss_legendre_24};
use crate::special::{erf, erfcx};
use crate::{ensure_finite, Error, Result};

// ---------------------------------------------------------------------------
// The weight integral
// ---------------------------------------------------------------------------

fn validate_integral_inputs(r: f64, v: f64, a: f64) -> Result<()> {
    ensure_finite(r, "integral drift r")?;
    ensure_finite(v, "integral variance v")?;
    ensure_finite(a, "integral upper limit a")?;
    if v < 0.0 {
        return Err(Error::InvalidParameter {
            context: "exp_quadratic_integral",
            message: format!("variance must be nonnegative, got {v}"),
        });
    }
    if a <= 0.0 {
        return Err(Error::InvalidParameter {
            context: "exp_quadratic_integral",
            message: format!("upper limit must be positive, got {a}"),
        });
    }
    Ok(())
}

/// Natural log of `integral_0^a exp(eta r - eta^2 v) d eta`.
///
/// Exact case split:
/// - `v = 0, r = 0`: the integral is `a`.
/// - `v = 0, r != 0`: `(exp(a r) - 1) / r`, evaluated through `expm1`.
/// - `v > 0`: completing the square gives
///   `sqrt(pi)/(2 sqrt(v)) * exp(x1^2) * (erf(x2) - erf(x1))` with
///   `x1 = -r/(2 sqrt(v))` and `x2 = x1 + a sqrt(v)`; the erf difference
///   switches to scaled-complementary (`erfcx`) form when both endpoints
///   sit on one side of the peak, keeping everything finite in log scale
///   for `|r|` far beyond 1e4.
///
/// When the exponent range over `[0, a]` is below 1 the whole case split
/// is bypassed for a fixed Gauss-Legendre rule, which is machine-exact
/// there and immune to the cancellation the erfcx forms suffer for
/// near-flat integrands.
pub fn ln_exp_quadratic_integral(r: f64, v: f64, a: f64) -> Result<f64> {
    validate_integral_inputs(r, v, a)?;

    if v == 0.0 {
        if r == 0.0 {
            return Ok(a.ln());
        }
        let z = a * r;
        return Ok(if r > 0.0 {
            // exp(z) - 1 = exp(z) (1 - exp(-z))
            z + (-(-z).exp_m1()).ln() - r.ln()
        } else {
            (-z.exp_m1()).ln() - (-r).ln()
        });
    }

    let s = v.sqrt();
    let h = a * s;
    let x1 = -r / (2.0 * s);
    let x2 = x1 + h;

    // Largest |exponent| over [0, a]: the endpoint, plus the interior
    // peak r^2/(4v) when the maximizer r/(2v) lies inside.
    let endpoint = (a * r - h * h).abs();
    let peak = if r > 0.0 && x2 > 0.0 { x1 * x1 } else { 0.0 };
    if endpoint.max(peak) <= 1.0 {
        let value = gauss_legendre_24(|eta| (eta * r - eta * eta * v).exp(), 0.0, a);
        return Ok(value.ln());
    }

    let ln_norm = 0.5 * core::f64::consts::PI.ln() - (2.0 * s).ln();
    if x1 >= 0.0 {
        // r <= 0: integrand decreasing, both endpoints right of the peak.
        let delta = -h * (2.0 * x1 + h); // x1^2 - x2^2, no cancellation
        Ok(ln_norm + (erfcx(x1) - delta.exp() * erfcx(x2)).ln())
    } else if x2 <= 0.0 {
        // r >= 2 a v: integrand increasing; reflect onto the previous case.
        let growth = -h * (2.0 * x1 + h); // x1^2 - x2^2 >= 0
        let delta = -growth;
        Ok(ln_norm + growth + (erfcx(-x2) - delta.exp() * erfcx(-x1)).ln())
    } else {
        // Peak strictly inside (0, a): the erf sum cannot cancel.
        Ok(ln_norm + x1 * x1 + (erf(x2) + erf(-x1)).ln())
    }
}

/// `integral_0^a exp(eta r - eta^2 v) d eta`.
///
/// Overflows to `+inf` only when the true value exceeds the f64 range;
/// use [`ln_exp_quadratic_integral`] when the logarithm is what is
/// needed.
pub fn exp_quadratic_integral(r: f64, v: f64, a: f64) -> Result<f64> {
    Ok(ln_exp_quadratic_integral(r, v, a)?.exp())
}

/// Weight vector induced by arbitrary per-expert statistics:
/// `p_k ∝ prior_k * integral_0^a exp(eta r_k - eta^2 v_k) d eta`,
/// evaluated in log space.
pub fn weights_from_statistics(
    prior: &[f64],
    clipped_regrets: &[f64],
    clipped_variances: &[f64],
    upper_limit: f64,
) -> Result<Vec<f64>> {
    if prior.len() != clipped_regrets.len() || prior.len() != clipped_variances.len() {
        return Err(Error::DimensionMismatch {
            context: "weights_from_statistics",
            expected: prior.len(),
            actual: clipped_regrets.len().max(clipped_variances.len()),
        });
    }
    let mut log_weights = Vec::with_capacity(prior.len());
    for k in 0..prior.len() {
        let ln_integral =
            ln_exp_quadratic_integral(clipped_regrets[k], clipped_variances[k], upper_limit)?;
        log_weights.push(prior[k].ln() + ln_integral);
    }
    Ok(softmax(&log_weights))
}

// ---------------------------------------------------------------------------
// Learner state
// ---------------------------------------------------------------------------

/// Fixed-scale clipped expert learner.
///
/// Construct with a prior and an initial scale estimate `B`; wrap in
/// [`crate::restart::ScaleFreeSquint`] to remove the estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Squint {
    prior: Vec<f64>,
    clipped_regret: Vec<CompensatedSum>,
    clipped_variance: Vec<CompensatedSum>,
    scale: ScaleTracker,
    prediction: Vec<f64>,
    round: u64,
    ledger: RegretLedger,
}

/// Outcome of one processed round.
#[derive(Debug, Clone)]
pub struct SquintRound {
    pub round: u64,
    /// `b_t = max_k |r_t^k|` against the unclipped loss.
    pub observed_scale: f64,
    /// `B_t`.
    pub scale_max: f64,
    /// `B_{t-1} / B_t`.
    pub clip_ratio: f64,
    /// Next round's weights.
    pub prediction: Vec<f64>,
}

impl Squint {
    /// Uniform-prior learner.
    pub fn uniform(experts: usize, initial_scale: f64) -> Result<Self> {
        Self::new(vec![1.0 / experts as f64; experts], initial_scale)
    }

    pub fn new(prior: Vec<f64>, initial_scale: f64) -> Result<Self> {
        if prior.len() < 2 {
            return Err(Error::InvalidParameter {
                context: "Squint",
                message: format!("need at least 2 experts, got {}", prior.len()),
            });
        }
        let mut total = CompensatedSum::new();
        for &p in &prior {
            ensure_finite(p, "prior entry")?;
            if p <= 0.0 {
                return Err(Error::InvalidParameter {
                    context: "Squint",
                    message: format!("prior entries must be positive, got {p}"),
                });
            }
            total.add(p);
        }
        if (total.value() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                context: "Squint",
                message: format!("prior sums to {}, not 1", total.value()),
            });
        }
        let experts = prior.len();
        Ok(Self {
            prediction: prior.clone(),
            prior,
            clipped_regret: vec![CompensatedSum::new(); experts],
            clipped_variance: vec![CompensatedSum::new(); experts],
            scale: ScaleTracker::with_initial_scale(initial_scale)?,
            round: 0,
            ledger: RegretLedger::new(LedgerMode::Expert { experts }),
        })
    }

    pub fn experts(&self) -> usize {
        self.prior.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    /// The weights to play in the upcoming round (`p_1` equals the prior).
    pub fn prediction(&self) -> &[f64] {
        &self.prediction
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    pub fn scale(&self) -> &ScaleTracker {
        &self.scale
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    /// Clipped cumulative regrets `Rbar_T^k`.
    pub fn clipped_regrets(&self) -> Vec<f64> {
        self.clipped_regret.iter().map(|c| c.value()).collect()
    }

    /// Clipped cumulative variances `Vbar_T^k`.
    pub fn clipped_variances(&self) -> Vec<f64> {
        self.clipped_variance.iter().map(|c| c.value()).collect()
    }

    /// Current upper integration limit `1/(2 B_T)`.
    pub fn integral_upper_limit(&self) -> f64 {
        1.0 / (2.0 * self.scale.current_max())
    }

    /// Registers a comparator with the internal regret ledger.
    pub fn register_comparator(&mut self, comparator: ComparatorSpec) -> Result<usize> {
        self.ledger.register(comparator)
    }

    /// Recomputes the weight vector from the current state.
    pub fn weights(&self) -> Result<Vec<f64>> {
        weights_from_statistics(
            &self.prior,
            &self.clipped_regrets(),
            &self.clipped_variances(),
            self.integral_upper_limit(),
        )
    }

    /// Processes one loss vector and returns the next prediction.
    pub fn round(&mut self, loss: &LossVector) -> Result<SquintRound> {
        if loss.len() != self.prior.len() {
            return Err(Error::DimensionMismatch {
                context: "Squint::round",
                expected: self.prior.len(),
                actual: loss.len(),
            });
        }

        let played = self.prediction.clone();
        let regrets = instantaneous_expert_regrets(&played, loss.entries());
        let observed = regrets.iter().fold(0.0f64, |m, &r| m.max(r.abs()));
        self.scale.observe(observed)?;

        let clipped_loss = self.scale.clip_loss(loss);
        let clipped_regrets = instantaneous_expert_regrets(&played, clipped_loss.entries());
        for (k, &r) in clipped_regrets.iter().enumerate() {
            self.clipped_regret[k].add(r);
            self.clipped_variance[k].add(r * r);
        }
        self.ledger
            .record_expert_round(&played, loss.entries(), clipped_loss.entries());

        self.round += 1;
        self.prediction = self.weights()?;
        Ok(SquintRound {
            round: self.round,
            observed_scale: observed,
            scale_max: self.scale.current_max(),
            clip_ratio: self.scale.clip_ratio(),
            prediction: self.prediction.clone(),
        })
    }

    /// Diagnostic potential
    /// `Phi_T = sum_k pi_k integral_0^{1/(2 B_{T-1})} (exp(eta Rbar_k - eta^2 Vbar_k) - 1) / eta  d eta`,
    /// evaluated by adaptive quadrature to 1e-9 absolute accuracy (the
    /// integrand extends continuously with value `Rbar_k` at zero).
    ///
    /// The algorithm never consumes this quantity; it exists so tests can
    /// certify `Phi_T <= ln(B_{T-1} / B)` on every prefix.
    pub fn potential(&self) -> f64 {
        if self.round == 0 {
            return 0.0;
        }
        let a = 1.0 / (2.0 * self.scale.previous_max());
        let mut total = CompensatedSum::new();
        for k in 0..self.prior.len() {
            let r = self.clipped_regret[k].value();
            let v = self.clipped_variance[k].value();
            let integral = adaptive_gauss_kronrod(
                |eta| {
                    if eta == 0.0 {
                        r
                    } else {
                        (eta * r - eta * eta * v).exp_m1() / eta
                    }
                },
                0.0,
                a,
                1e-11,
                1e-12,
            );
            total.add(self.prior[k] * integral.value);
        }
        total.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_ln_integral(r: f64, v: f64, a: f64) -> f64 {
        // Exponent-shifted adaptive quadrature with peak-bracketing
        // knots, independent of the closed-form path.
        crate::harness::verify::quadrature_log_integral(r, v, a)
    }

    #[test]
    fn integral_of_one_is_the_interval_length() {
        assert_eq!(exp_quadratic_integral(0.0, 0.0, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn integral_of_exp_eta() {
        let got = exp_quadratic_integral(1.0, 0.0, 1.0).unwrap();
        assert!((got - (core::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn integral_matches_quadrature_oracle() {
        let got = ln_exp_quadratic_integral(3.0, 2.0, 0.7).unwrap();
        let want = oracle_ln_integral(3.0, 2.0, 0.7);
        assert!(
            (got - want).abs() < 1e-10 * want.abs().max(1.0),
            "got {got}, want {want}"
        );
    }

    #[test]
    fn integral_matches_oracle_across_branches() {
        let cases = [
            (-250.0, 4.0, 0.5),    // erfcx branch, strong drift
            (-3.0, 900.0, 0.5),    // erfcx branch, strong curvature
            (400.0, 10.0, 0.5),    // reflected branch
            (120.0, 60000.0, 0.5), // interior peak
            (0.5, 0.3, 0.4),       // gentle: fixed rule
            (-1e4, 2.0, 0.5),      // log-stable far tail
            (1e4, 7.0, 0.25),      // huge positive drift
            (40.0, 1e8, 0.5),      // near-flat in eta, sharp in v
            (3.0, 1e-12, 0.9),     // vanishing variance
        ];
        for (r, v, a) in cases {
            let got = ln_exp_quadratic_integral(r, v, a).unwrap();
            let want = oracle_ln_integral(r, v, a);
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "r={r}, v={v}, a={a}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn integral_rejects_bad_inputs() {
        assert!(exp_quadratic_integral(f64::NAN, 0.0, 1.0).is_err());
        assert!(exp_quadratic_integral(0.0, -1.0, 1.0).is_err());
        assert!(exp_quadratic_integral(0.0, 0.0, 0.0).is_err());
    }

    fn loss(values: &[f64]) -> LossVector {
        LossVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn first_prediction_is_the_prior() {
        let learner = Squint::new(vec![0.2, 0.3, 0.5], 1.0).unwrap();
        assert_eq!(learner.prediction(), &[0.2, 0.3, 0.5]);
        // The recomputed weights agree up to normalization noise.
        let w = learner.weights().unwrap();
        for (a, b) in w.iter().zip(learner.prior()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_round_hand_example() {
        // K=2, p = (1/2, 1/2), loss (0, 1), B = 1: b_1 = 1/2, no clipping,
        // Rbar = (1/2, -1/2), Vbar = (1/4, 1/4).
        let mut learner = Squint::uniform(2, 1.0).unwrap();
        let record = learner.round(&loss(&[0.0, 1.0])).unwrap();
        assert_eq!(record.observed_scale, 0.5);
        assert_eq!(record.scale_max, 1.0);
        assert_eq!(record.clip_ratio, 1.0);
        assert_eq!(learner.clipped_regrets(), vec![0.5, -0.5]);
        assert_eq!(learner.clipped_variances(), vec![0.25, 0.25]);
        // Expert 0 beat the mixture, so it gains weight.
        assert!(record.prediction[0] > 0.5);
    }

    #[test]
    fn identical_losses_leave_the_state_unchanged() {
        // The played weights sum to 1 only up to normalization noise, so
        // an all-equal round produces instantaneous regrets at the scale
        // of that noise, not exactly zero.
        let mut learner = Squint::uniform(3, 2.0).unwrap();
        learner.round(&loss(&[0.1, 0.9, 0.4])).unwrap();
        let before = learner.prediction().to_vec();
        let record = learner.round(&loss(&[7.0, 7.0, 7.0])).unwrap();
        assert!(record.observed_scale < 1e-13);
        for (a, b) in record.prediction.iter().zip(&before) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_state_keeps_uniform_weights() {
        // Equal statistics for both experts reduce the weights to the
        // prior regardless of the history that produced them.
        let w = weights_from_statistics(&[0.5, 0.5], &[1.75, 1.75], &[3.5, 3.5], 0.4).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_form_a_probability_vector() {
        let mut learner = Squint::new(vec![0.6, 0.1, 0.3], 0.5).unwrap();
        for t in 0..40 {
            let l = loss(&[(t as f64 * 0.7).sin(), 0.3, (t as f64 * 0.3).cos()]);
            let record = learner.round(&l).unwrap();
            let total: f64 = record.prediction.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(record.prediction.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn potential_is_zero_initially_and_for_flat_state() {
        let mut learner = Squint::uniform(4, 1.0).unwrap();
        assert_eq!(learner.potential(), 0.0);
        learner.round(&loss(&[3.0, 3.0, 3.0, 3.0])).unwrap();
        assert!(learner.potential().abs() < 1e-12);
    }

    #[test]
    fn potential_respects_the_scale_ratio_bound() {
        let mut learner = Squint::uniform(3, 1.0).unwrap();
        let mut scale = 1.0;
        for t in 0..20 {
            if t == 7 {
                scale = 10.0;
            }
            let l = loss(&[
                scale * ((t * 3) as f64 * 0.41).sin(),
                scale * 0.2,
                scale * ((t * 5) as f64 * 0.17).cos(),
            ]);
            learner.round(&l).unwrap();
            let bound =
                (learner.scale().previous_max() / learner.scale().initial_scale().unwrap()).ln();
            assert!(
                learner.potential() <= bound + 1e-9,
                "round {t}: potential {} > bound {bound}",
                learner.potential()
            );
        }
    }

    #[test]
    fn clipped_increments_stay_within_previous_max() {
        let mut learner = Squint::uniform(2, 1.0).unwrap();
        let mut previous = learner.clipped_regrets();
        for t in 0..30 {
            let spike = if t == 11 { 100.0 } else { 1.0 };
            let prev_max = learner.scale().current_max();
            learner
                .round(&loss(&[spike * (t as f64).sin(), -spike * 0.4]))
                .unwrap();
            let now = learner.clipped_regrets();
            for k in 0..2 {
                let increment = now[k] - previous[k];
                assert!(increment.abs() <= prev_max * (1.0 + 1e-12));
            }
            previous = now;
        }
    }
}
