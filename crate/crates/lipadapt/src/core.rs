//! Shared vocabulary for the online learning loop: loss and gradient
//! streams, running scale tracking with clipping, and regret accounting.
//!
//! The central object is [`ScaleTracker`]. In round `t` the learner
//! observes a magnitude `b_t` (the per-round Lipschitz observation: the
//! largest instantaneous regret against any expert, or `D * ||g_t||` in
//! the optimization setting), keeps the running maximum
//! `B_t = B v max_{s<=t} b_s`, and clips the round's loss by the ratio
//! `B_{t-1} / B_t` so that its effective range is known *before* the round
//! is processed. The cumulative cost of clipping telescopes:
//! `R_T - clipped R_T <= B_T - B_0` for every comparator.

use serde::{Deserialize, Serialize};

use crate::numeric::{dot, CompensatedSum};
use crate::{ensure_finite, Error, Result};

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

/// Per-round loss vector over `K >= 2` experts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidParameter {
                context: "LossVector",
                message: format!("need at least 2 experts, got {}", entries.len()),
            });
        }
        for &value in &entries {
            ensure_finite(value, "LossVector entry")?;
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise rescaling, used for loss clipping.
    pub fn scaled(&self, ratio: f64) -> Self {
        Self(self.0.iter().map(|&x| ratio * x).collect())
    }
}

/// Per-round gradient in `d >= 1` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient(Vec<f64>);

impl Gradient {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter {
                context: "Gradient",
                message: "need dimension >= 1".to_string(),
            });
        }
        for &value in &entries {
            ensure_finite(value, "Gradient entry")?;
        }
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, ratio: f64) -> Self {
        Self(self.0.iter().map(|&x| ratio * x).collect())
    }
}

/// Instantaneous regrets `r_t^k = <p - e_k, loss>` of a played weight
/// vector against every expert.
pub fn instantaneous_expert_regrets(prediction: &[f64], loss: &[f64]) -> Vec<f64> {
    let mixture = dot(prediction, loss);
    loss.iter().map(|&l| mixture - l).collect()
}

// ---------------------------------------------------------------------------
// Scale tracking
// ---------------------------------------------------------------------------

/// Running Lipschitz estimate with clipping ratios.
///
/// A tracker is either created with a known initial scale `B > 0`
/// ([`ScaleTracker::with_initial_scale`], used by the fixed-scale
/// learners), or unscaled ([`ScaleTracker::unscaled`], used by the restart
/// wrapper): in the latter case it refuses to finalize its initial scale
/// until the first nonzero observation arrives, and zero-magnitude rounds
/// before that point contribute nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTracker {
    initial_scale: Option<f64>,
    current_max: f64,
    previous_max: f64,
    last_observed: f64,
    sum_ratio: CompensatedSum,
    rounds: u64,
}

impl ScaleTracker {
    pub fn with_initial_scale(initial_scale: f64) -> Result<Self> {
        ensure_finite(initial_scale, "initial scale")?;
        if initial_scale <= 0.0 {
            return Err(Error::InvalidParameter {
                context: "ScaleTracker",
                message: format!("initial scale must be positive, got {initial_scale}"),
            });
        }
        Ok(Self {
            initial_scale: Some(initial_scale),
            current_max: initial_scale,
            previous_max: initial_scale,
            last_observed: 0.0,
            sum_ratio: CompensatedSum::new(),
            rounds: 0,
        })
    }

    /// Tracker with a pending initial scale; finalizes on the first
    /// nonzero observation.
    pub fn unscaled() -> Self {
        Self {
            initial_scale: None,
            current_max: 0.0,
            previous_max: 0.0,
            last_observed: 0.0,
            sum_ratio: CompensatedSum::new(),
            rounds: 0,
        }
    }

    /// Records the round's observed magnitude `b_t` and advances
    /// `B_{t-1} -> B_t`.
    pub fn observe(&mut self, magnitude: f64) -> Result<()> {
        ensure_finite(magnitude, "observed scale")?;
        if magnitude < 0.0 {
            return Err(Error::InvalidParameter {
                context: "ScaleTracker::observe",
                message: format!("magnitude must be nonnegative, got {magnitude}"),
            });
        }
        if self.initial_scale.is_none() && magnitude > 0.0 {
            // First signal: the observed magnitude becomes the scale.
            self.initial_scale = Some(magnitude);
            self.current_max = magnitude;
        }
        self.previous_max = self.current_max;
        self.current_max = self.current_max.max(magnitude);
        self.last_observed = magnitude;
        if self.current_max > 0.0 {
            self.sum_ratio.add(magnitude / self.current_max);
        }
        self.rounds += 1;
        Ok(())
    }

    /// Clipping ratio `B_{t-1} / B_t` for the current round (1 while no
    /// scale has been observed).
    pub fn clip_ratio(&self) -> f64 {
        if self.current_max > 0.0 {
            self.previous_max / self.current_max
        } else {
            1.0
        }
    }

    /// `B_t`.
    pub fn current_max(&self) -> f64 {
        self.current_max
    }

    /// `B_{t-1}`.
    pub fn previous_max(&self) -> f64 {
        self.previous_max
    }

    /// `b_t`.
    pub fn last_observed(&self) -> f64 {
        self.last_observed
    }

    /// `sum_{s<=t} b_s / B_s`.
    pub fn sum_ratio(&self) -> f64 {
        self.sum_ratio.value()
    }

    pub fn initial_scale(&self) -> Option<f64> {
        self.initial_scale
    }

    pub fn is_finalized(&self) -> bool {
        self.initial_scale.is_some()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Clips a loss vector by the current round's ratio.
    pub fn clip_loss(&self, raw: &LossVector) -> LossVector {
        raw.scaled(self.clip_ratio())
    }

    /// Clips a gradient by the current round's ratio.
    pub fn clip_gradient(&self, raw: &Gradient) -> Gradient {
        raw.scaled(self.clip_ratio())
    }
}

// ---------------------------------------------------------------------------
// Comparators and regret accounting
// ---------------------------------------------------------------------------

/// A fixed comparator to measure regret against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ComparatorSpec {
    /// Point mass on one expert.
    Expert(usize),
    /// Distribution over experts.
    Distribution(Vec<f64>),
    /// Fixed point of the optimization domain.
    Point(Vec<f64>),
}

impl ComparatorSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Expert(k) => format!("expert {k}"),
            Self::Distribution(_) => "distribution".to_string(),
            Self::Point(_) => "point".to_string(),
        }
    }

    fn validate(&self, mode: &LedgerMode) -> Result<()> {
        match (self, mode) {
            (Self::Expert(k), LedgerMode::Expert { experts }) => {
                if k >= experts {
                    return Err(Error::DimensionMismatch {
                        context: "comparator expert index",
                        expected: *experts,
                        actual: *k,
                    });
                }
            }
            (Self::Distribution(rho), LedgerMode::Expert { experts }) => {
                if rho.len() != *experts {
                    return Err(Error::DimensionMismatch {
                        context: "comparator distribution",
                        expected: *experts,
                        actual: rho.len(),
                    });
                }
                let mut total = CompensatedSum::new();
                for &p in rho {
                    ensure_finite(p, "comparator probability")?;
                    if p < 0.0 {
                        return Err(Error::InvalidParameter {
                            context: "ComparatorSpec",
                            message: format!("negative probability {p}"),
                        });
                    }
                    total.add(p);
                }
                if (total.value() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter {
                        context: "ComparatorSpec",
                        message: format!("distribution sums to {}, not 1", total.value()),
                    });
                }
            }
            (Self::Point(u), LedgerMode::Oco { dimension }) => {
                if u.len() != *dimension {
                    return Err(Error::DimensionMismatch {
                        context: "comparator point",
                        expected: *dimension,
                        actual: u.len(),
                    });
                }
                for &x in u {
                    ensure_finite(x, "comparator coordinate")?;
                }
            }
            _ => {
                return Err(Error::InvalidParameter {
                    context: "ComparatorSpec",
                    message: format!("{} does not fit the ledger mode", self.label()),
                });
            }
        }
        Ok(())
    }
}

/// Which regret notion a ledger accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedgerMode {
    /// True expert regret `sum_t <p_t - comparator, loss_t>`.
    Expert { experts: usize },
    /// Linearized pseudo-regret `sum_t <u_t - comparator, g_t>`.
    Oco { dimension: usize },
}

/// Cumulative regret and variance statistics for one comparator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretAccount {
    regret: CompensatedSum,
    clipped_regret: CompensatedSum,
    variance: CompensatedSum,
    clipped_variance: CompensatedSum,
}

impl RegretAccount {
    /// `R_T` (experts) or the pseudo-regret (optimization).
    pub fn regret(&self) -> f64 {
        self.regret.value()
    }

    pub fn clipped_regret(&self) -> f64 {
        self.clipped_regret.value()
    }

    /// `V_T = sum_t r_t^2` (expectation under the comparator distribution).
    pub fn variance(&self) -> f64 {
        self.variance.value()
    }

    pub fn clipped_variance(&self) -> f64 {
        self.clipped_variance.value()
    }

    fn record(&mut self, r: f64, r_clipped: f64, v: f64, v_clipped: f64) {
        self.regret.add(r);
        self.clipped_regret.add(r_clipped);
        self.variance.add(v);
        self.clipped_variance.add(v_clipped);
    }
}

/// Regret accounts for a set of registered comparators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    mode: LedgerMode,
    entries: Vec<(ComparatorSpec, RegretAccount)>,
    rounds: u64,
}

impl RegretLedger {
    pub fn new(mode: LedgerMode) -> Self {
        Self {
            mode,
            entries: Vec::new(),
            rounds: 0,
        }
    }

    pub fn mode(&self) -> LedgerMode {
        self.mode
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Registers a comparator; returns its index.
    pub fn register(&mut self, comparator: ComparatorSpec) -> Result<usize> {
        comparator.validate(&self.mode)?;
        self.entries.push((comparator, RegretAccount::default()));
        Ok(self.entries.len() - 1)
    }

    pub fn comparators(&self) -> impl Iterator<Item = &ComparatorSpec> {
        self.entries.iter().map(|(c, _)| c)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&ComparatorSpec, &RegretAccount)> {
        self.entries.iter().map(|(c, a)| (c, a))
    }

    pub fn account(&self, index: usize) -> &RegretAccount {
        &self.entries[index].1
    }

    /// Records one expert round. `loss` is the raw loss vector and
    /// `clipped_loss` its clipped version.
    pub fn record_expert_round(&mut self, prediction: &[f64], loss: &[f64], clipped_loss: &[f64]) {
        let regrets = instantaneous_expert_regrets(prediction, loss);
        let clipped_regrets = instantaneous_expert_regrets(prediction, clipped_loss);
        for (comparator, account) in &mut self.entries {
            match comparator {
                ComparatorSpec::Expert(k) => {
                    let r = regrets[*k];
                    let rc = clipped_regrets[*k];
                    account.record(r, rc, r * r, rc * rc);
                }
                ComparatorSpec::Distribution(rho) => {
                    // Variance is the rho-expectation of per-expert squares,
                    // not the square of the expectation.
                    let r = dot(rho, &regrets);
                    let rc = dot(rho, &clipped_regrets);
                    let v = rho
                        .iter()
                        .zip(&regrets)
                        .map(|(&p, &x)| p * x * x)
                        .sum::<f64>();
                    let vc = rho
                        .iter()
                        .zip(&clipped_regrets)
                        .map(|(&p, &x)| p * x * x)
                        .sum::<f64>();
                    account.record(r, rc, v, vc);
                }
                ComparatorSpec::Point(_) => unreachable!("validated against mode"),
            }
        }
        self.rounds += 1;
    }

    /// Records one optimization round with the played point, the raw
    /// gradient, and its clipped version.
    pub fn record_oco_round(&mut self, played: &[f64], gradient: &[f64], clipped_gradient: &[f64]) {
        for (comparator, account) in &mut self.entries {
            let ComparatorSpec::Point(u) = comparator else {
                unreachable!("validated against mode")
            };
            let diff: Vec<f64> = played.iter().zip(u.iter()).map(|(&a, &b)| a - b).collect();
            let r = dot(&diff, gradient);
            let rc = dot(&diff, clipped_gradient);
            account.record(r, rc, r * r, rc * rc);
        }
        self.rounds += 1;
    }

    /// Cumulative regret against a registered comparator.
    pub fn regret_vs(&self, comparator: &ComparatorSpec) -> Result<f64> {
        if self.rounds == 0 {
            return Err(Error::EmptyTrace("regret_vs needs a completed round"));
        }
        comparator.validate(&self.mode)?;
        self.entries
            .iter()
            .find(|(c, _)| c == comparator)
            .map(|(_, a)| a.regret())
            .ok_or_else(|| Error::UnknownComparator(comparator.label()))
    }
}

/// `KL(rho || pi)` over experts, with `0 ln 0 = 0`.
pub fn kl_divergence(rho: &[f64], pi: &[f64]) -> f64 {
    rho.iter()
        .zip(pi)
        .map(|(&r, &p)| if r > 0.0 { r * (r / p).ln() } else { 0.0 })
        .sum()
}
