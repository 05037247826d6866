//! Second-order online convex optimization on a centered ball with a
//! master aggregating slave learners over an infinite learning-rate grid.
//!
//! Each slave owns one learning rate `eta_i = 2^{-i} / (5B)` with prior
//! `pi(eta_i) = 1/((i+1)(i+2))` (the priors telescope to 1). A slave is
//! *asleep* until the observed cumulative scale makes its rate useful:
//! it wakes at the first time `t` with
//! `eta >= 1 / (D sum_{s<=t} ||gbar_s|| + B_t)` and predicts from the next
//! round, starting at the origin with a fresh second-order state. Rates
//! larger than `1/(5 B_{t-1})` are inadmissible for round `t`; once the
//! running maximum `B` grows past a slave's admissibility it is retired
//! for good (the maximum never decreases).
//!
//! Per round, every active slave updates
//!
//! ```text
//! u'   = u - eta Sigma gbar (1 + 2 eta (u - master)' gbar),
//! Sigma = (I/D^2 + 2 eta^2 Gram)^{-1},
//! ```
//!
//! followed by a Mahalanobis projection onto the ball, and multiplies its
//! weight by `exp(eta r - (eta r)^2)` where `r = <master - u, gbar>`. The
//! master plays the `eta w`-weighted mean of slave predictions. Gradients
//! are clipped by `B_{t-1}/B_t` exactly like losses on the expert side.
//!
//! The diagnostic potential (prior mass of admissible sleeping slaves
//! plus total active weight) never exceeds 1; tests lean on that
//! invariant heavily.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::core::{ComparatorSpec, Gradient, LedgerMode, RegretLedger, ScaleTracker};
use crate::numeric::CompensatedSum;
use crate::projection::BallProjector;
use crate::{ensure_finite, Error, Result};

// ---------------------------------------------------------------------------
// Learning-rate grid
// ---------------------------------------------------------------------------

/// The exponential learning-rate grid `eta_i = 2^{-i} / (5 B)` with
/// telescoping prior `pi(eta_i) = 1/((i+1)(i+2))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningRateGrid {
    base_scale: f64,
}

impl LearningRateGrid {
    pub fn new(base_scale: f64) -> Result<Self> {
        ensure_finite(base_scale, "grid base scale")?;
        if base_scale <= 0.0 {
            return Err(Error::InvalidParameter {
                context: "LearningRateGrid",
                message: format!("base scale must be positive, got {base_scale}"),
            });
        }
        Ok(Self { base_scale })
    }

    pub fn base_scale(&self) -> f64 {
        self.base_scale
    }

    /// `eta_i`. Powers of two are exact, so rate comparisons are
    /// reproducible.
    pub fn rate(&self, index: u32) -> f64 {
        pow2_neg(index) / (5.0 * self.base_scale)
    }

    /// `pi(eta_i)`.
    pub fn prior(index: u32) -> f64 {
        let i = index as f64;
        1.0 / ((i + 1.0) * (i + 2.0))
    }

    /// `sum_{i >= n} pi(eta_i) = 1/(n+1)`, by telescoping.
    pub fn tail_mass(first_index: u32) -> f64 {
        1.0 / (first_index as f64 + 1.0)
    }
}

fn pow2_neg(index: u32) -> f64 {
    if index <= 1074 {
        f64::powi(2.0, -(index as i32))
    } else {
        0.0
    }
}

/// Surrogate loss `-x + x^2` at `x = eta * r`; always at least `-1/4`.
pub fn surrogate_loss(eta: f64, clipped_regret: f64) -> f64 {
    let x = eta * clipped_regret;
    -x + x * x
}

/// Master aggregation: the `eta w`-weighted mean of slave predictions,
/// log-stabilized; the origin when no slave is active.
pub fn aggregate_master(slaves: &[SlaveState], dimension: usize) -> DVector<f64> {
    if slaves.is_empty() {
        return DVector::zeros(dimension);
    }
    let log_coefficients: Vec<f64> = slaves.iter().map(|s| s.eta.ln() + s.log_weight).collect();
    let shift = log_coefficients
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut numerator = DVector::zeros(dimension);
    let mut denominator = 0.0;
    for (slave, &log_coefficient) in slaves.iter().zip(&log_coefficients) {
        let coefficient = (log_coefficient - shift).exp();
        numerator += &slave.mean * coefficient;
        denominator += coefficient;
    }
    numerator / denominator
}

// ---------------------------------------------------------------------------
// Slave state
// ---------------------------------------------------------------------------

/// One active slave: a learning rate, its second-order state since its
/// wake time, and its log weight (including the log prior).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlaveState {
    index: u32,
    eta: f64,
    wake_time: u64,
    mean: DVector<f64>,
    unprojected: DVector<f64>,
    gram: DMatrix<f64>,
    log_weight: f64,
}

impl SlaveState {
    /// A just-woken slave: zero mean and Gram, prior weight.
    pub fn fresh(index: u32, eta: f64, wake_time: u64, dimension: usize) -> Self {
        Self {
            index,
            eta,
            wake_time,
            mean: DVector::zeros(dimension),
            unprojected: DVector::zeros(dimension),
            gram: DMatrix::zeros(dimension, dimension),
            log_weight: LearningRateGrid::prior(index).ln(),
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn wake_time(&self) -> u64 {
        self.wake_time
    }

    /// The slave's current prediction.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn unprojected(&self) -> &DVector<f64> {
        &self.unprojected
    }

    /// Clipped Gram matrix accumulated since the wake time.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Log of the slave's weight, prior included.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    /// One slave round: weight update at the *current* mean, Gram and
    /// second-order mean update, then ball projection.
    pub fn update(
        &mut self,
        master_prediction: &DVector<f64>,
        clipped_gradient: &DVector<f64>,
        diameter: f64,
        newton_tolerance: f64,
        max_newton_iters: u32,
    ) -> Result<()> {
        let regret = (master_prediction - &self.mean).dot(clipped_gradient);
        self.log_weight -= surrogate_loss(self.eta, regret);

        self.gram += clipped_gradient * clipped_gradient.transpose();
        let projector =
            BallProjector::with_options(diameter, &self.gram, newton_tolerance, max_newton_iters)?;
        let sigma_gradient = projector.sigma_apply(self.eta, clipped_gradient);
        let factor = 1.0 + 2.0 * self.eta * (&self.mean - master_prediction).dot(clipped_gradient);
        self.unprojected = &self.mean - sigma_gradient * (self.eta * factor);
        let outcome = projector.project(&self.unprojected, self.eta, None)?;
        self.mean = outcome.point;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// The learner
// ---------------------------------------------------------------------------

/// Configuration for a fixed-scale learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaGradConfig {
    pub dimension: usize,
    /// Diameter of the prediction ball (radius `diameter / 2`).
    pub diameter: f64,
    /// Initial scale estimate `B` (grid base and clipping floor).
    pub initial_scale: f64,
}

/// Fixed-scale clipped second-order learner on the centered ball.
///
/// Wrap in [`crate::restart::ScaleFreeMetaGrad`] to drop the initial
/// scale estimate, or drive through
/// [`crate::projection::reduce_to_ball_round`] for non-ball domains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaGrad {
    dimension: usize,
    diameter: f64,
    grid: LearningRateGrid,
    slaves: Vec<SlaveState>,
    scale: ScaleTracker,
    /// `D * sum_s ||gbar_s||`, the wake-threshold accumulator.
    wake_sum: CompensatedSum,
    /// Smallest admissible grid index for the upcoming round.
    min_index: u32,
    /// Smallest grid index that has never woken.
    next_wake_index: u32,
    round: u64,
    prediction: DVector<f64>,
    last_potential: f64,
    ledger: RegretLedger,
    newton_tolerance: f64,
    max_newton_iters: u32,
}

/// Outcome of one processed round.
#[derive(Debug, Clone)]
pub struct MetaGradRound {
    pub round: u64,
    /// `b_t = D ||g_t||`.
    pub observed_scale: f64,
    /// `B_t`.
    pub scale_max: f64,
    /// `B_{t-1} / B_t`.
    pub clip_ratio: f64,
    /// Number of slaves that produced this round's prediction.
    pub active_slaves: usize,
    /// Diagnostic potential after this round.
    pub potential: f64,
    /// Next round's master prediction.
    pub prediction: Vec<f64>,
}

impl MetaGrad {
    pub fn new(config: &MetaGradConfig) -> Result<Self> {
        if config.dimension == 0 {
            return Err(Error::InvalidParameter {
                context: "MetaGrad",
                message: "dimension must be at least 1".to_string(),
            });
        }
        ensure_finite(config.diameter, "diameter")?;
        if config.diameter <= 0.0 {
            return Err(Error::InvalidParameter {
                context: "MetaGrad",
                message: format!("diameter must be positive, got {}", config.diameter),
            });
        }
        Ok(Self {
            dimension: config.dimension,
            diameter: config.diameter,
            grid: LearningRateGrid::new(config.initial_scale)?,
            slaves: Vec::new(),
            scale: ScaleTracker::with_initial_scale(config.initial_scale)?,
            wake_sum: CompensatedSum::new(),
            min_index: 0,
            next_wake_index: 0,
            round: 0,
            prediction: DVector::zeros(config.dimension),
            last_potential: 1.0,
            ledger: RegretLedger::new(LedgerMode::Oco {
                dimension: config.dimension,
            }),
            newton_tolerance: BallProjector::DEFAULT_TOLERANCE,
            max_newton_iters: BallProjector::DEFAULT_MAX_ITERS,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn grid(&self) -> &LearningRateGrid {
        &self.grid
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

    pub fn active_slaves(&self) -> &[SlaveState] {
        &self.slaves
    }

    /// The master prediction for the upcoming round (origin at the start).
    pub fn prediction(&self) -> &[f64] {
        self.prediction.as_slice()
    }

    /// Diagnostic potential of the last completed round: prior mass of
    /// admissible sleeping slaves plus total active weight. Equals 1 at
    /// round zero and never exceeds 1 afterwards.
    pub fn potential(&self) -> f64 {
        self.last_potential
    }

    /// Registers a comparator point with the internal pseudo-regret ledger.
    pub fn register_comparator(&mut self, comparator: ComparatorSpec) -> Result<usize> {
        self.ledger.register(comparator)
    }

    fn current_potential(&self) -> f64 {
        let sleeping_from = self.min_index.max(self.next_wake_index);
        let mut total = CompensatedSum::from_value(LearningRateGrid::tail_mass(sleeping_from));
        for slave in &self.slaves {
            total.add(slave.log_weight.exp());
        }
        total.value()
    }

    fn master_prediction(&self) -> DVector<f64> {
        aggregate_master(&self.slaves, self.dimension)
    }

    /// Retires inadmissible slaves and wakes every grid rate whose
    /// threshold the accumulated scale has crossed, using the quantities
    /// through the just-finished round.
    fn refresh_active_set(&mut self) {
        let scale_max = self.scale.current_max();
        let base = self.grid.base_scale();

        // Admissibility: eta_i <= 1/(5 B_t), i.e. 2^{-i} B_t <= B.
        while pow2_neg(self.min_index) * scale_max > base {
            self.min_index += 1;
        }
        let min_index = self.min_index;
        self.slaves.retain(|s| s.index >= min_index);

        // Wake condition: eta_i >= 1/(W + B_t), i.e. 2^{-i} (W + B_t) >= 5 B.
        let threshold = self.wake_sum.value() + scale_max;
        while pow2_neg(self.next_wake_index) * threshold >= 5.0 * base {
            let index = self.next_wake_index;
            if index >= self.min_index {
                self.slaves.push(SlaveState::fresh(
                    index,
                    self.grid.rate(index),
                    self.round,
                    self.dimension,
                ));
            }
            self.next_wake_index += 1;
        }
    }

    /// Processes one gradient (evaluated at the prediction this state
    /// emitted) and returns the next prediction.
    pub fn round(&mut self, gradient: &Gradient) -> Result<MetaGradRound> {
        if gradient.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: "MetaGrad::round",
                expected: self.dimension,
                actual: gradient.len(),
            });
        }
        self.round += 1;
        let played = self.prediction.clone();
        let active_count = self.slaves.len();

        let observed = self.diameter * gradient.norm();
        self.scale.observe(observed)?;
        let clipped = self.scale.clip_gradient(gradient);
        let clipped_vector = DVector::from_column_slice(clipped.entries());

        for slave in &mut self.slaves {
            slave.update(
                &played,
                &clipped_vector,
                self.diameter,
                self.newton_tolerance,
                self.max_newton_iters,
            )?;
        }
        self.wake_sum.add(self.diameter * clipped_vector.norm());

        // Potential of the round just finished: the active set is still
        // this round's, while the weights already include this round.
        self.last_potential = self.current_potential();

        self.refresh_active_set();
        self.prediction = self.master_prediction();
        self.ledger
            .record_oco_round(played.as_slice(), gradient.entries(), clipped.entries());

        Ok(MetaGradRound {
            round: self.round,
            observed_scale: observed,
            scale_max: self.scale.current_max(),
            clip_ratio: self.scale.clip_ratio(),
            active_slaves: active_count,
            potential: self.last_potential,
            prediction: self.prediction.as_slice().to_vec(),
        })
    }
}
