//! The scale-free restart wrapper.
//!
//! A fixed-scale learner started with estimate `B` pays for the gap
//! between `B` and the true loss scale in both directions: too small
//! inflates the doubly-logarithmic scale term, too large inflates the
//! additive one. The wrapper removes the estimate entirely:
//!
//! 1. play the learner's default point until the first round with a
//!    nonzero observed scale `b_t`, then start the inner learner with
//!    `B` equal to the running maximum at that point;
//! 2. after each inner round, restart with the current running maximum as
//!    soon as `B_t / B_epoch > sum_{s<=t} b_s / B_s` (all sums global,
//!    from round one, across epochs);
//! 3. restarts are cold: no statistics carry over.
//!
//! The trigger fires after the inner learner has consumed the round that
//! raised `B_t`, so the raising round belongs to the old epoch. Both
//! trigger sides are zero-degree homogeneous in the loss scale once `B`
//! is data-derived, which is exactly what makes the wrapped learner
//! scale-free: multiplying every loss by `c > 0` reproduces the same
//! predictions and the same restart schedule.

use serde::{Deserialize, Serialize};

use crate::core::{
    instantaneous_expert_regrets, ComparatorSpec, Gradient, LedgerMode, LossVector, RegretLedger,
    ScaleTracker,
};
use crate::metagrad::{MetaGrad, MetaGradConfig};
use crate::squint::Squint;
use crate::Result;

/// One recorded restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartEvent {
    /// The round whose trigger fired; the next epoch starts at `round + 1`.
    pub round: u64,
    pub old_scale: f64,
    pub new_scale: f64,
}

/// Outcome of one supervised round.
#[derive(Debug, Clone)]
pub struct SupervisedRound {
    pub round: u64,
    /// Global `b_t`.
    pub observed_scale: f64,
    /// Global `B_t`.
    pub scale_max: f64,
    /// Whether this round's trigger fired (the next round starts fresh).
    pub restarted: bool,
    /// The prediction for the next round.
    pub prediction: Vec<f64>,
    /// The inner learner's own round index within the current epoch.
    pub inner_round: Option<u64>,
    /// Slave count used this round (optimization wrapper only).
    pub active_slaves: Option<usize>,
    /// Inner diagnostic potential (optimization wrapper only; the expert
    /// potential is quadrature-priced and queried on demand instead).
    pub potential: Option<f64>,
}

fn restart_triggered(global: &ScaleTracker, epoch_scale: f64) -> bool {
    global.current_max() / epoch_scale > global.sum_ratio()
}

// ---------------------------------------------------------------------------
// Expert wrapper
// ---------------------------------------------------------------------------

/// Scale-free expert aggregation: the restart wrapper around [`Squint`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleFreeSquint {
    prior: Vec<f64>,
    inner: Option<Squint>,
    epoch_scale: f64,
    global: ScaleTracker,
    restarts: Vec<RestartEvent>,
    epoch_count: u64,
    round: u64,
    ledger: RegretLedger,
    comparators: Vec<ComparatorSpec>,
}

impl ScaleFreeSquint {
    pub fn uniform(experts: usize) -> Result<Self> {
        Self::new(vec![1.0 / experts as f64; experts])
    }

    pub fn new(prior: Vec<f64>) -> Result<Self> {
        // Validate the prior eagerly by constructing a throwaway learner.
        Squint::new(prior.clone(), 1.0)?;
        let experts = prior.len();
        Ok(Self {
            prior,
            inner: None,
            epoch_scale: 0.0,
            global: ScaleTracker::unscaled(),
            restarts: Vec::new(),
            epoch_count: 0,
            round: 0,
            ledger: RegretLedger::new(LedgerMode::Expert { experts }),
            comparators: Vec::new(),
        })
    }

    pub fn experts(&self) -> usize {
        self.prior.len()
    }

    /// The weights to play next: the prior before the first signal, the
    /// inner learner's weights afterwards.
    pub fn prediction(&self) -> &[f64] {
        self.inner
            .as_ref()
            .map_or(&self.prior, |inner| inner.prediction())
    }

    /// Registers a comparator with the global (whole-run) ledger and
    /// every inner epoch.
    pub fn register_comparator(&mut self, comparator: ComparatorSpec) -> Result<()> {
        self.ledger.register(comparator.clone())?;
        if let Some(inner) = &mut self.inner {
            inner.register_comparator(comparator.clone())?;
        }
        self.comparators.push(comparator);
        Ok(())
    }

    /// Global whole-run regret accounts (clipping by the global ratio).
    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    /// The current epoch's learner, if one has started.
    pub fn inner(&self) -> Option<&Squint> {
        self.inner.as_ref()
    }

    /// Global scale statistics from round one, never reset.
    pub fn global_scale(&self) -> &ScaleTracker {
        &self.global
    }

    pub fn restarts(&self) -> &[RestartEvent] {
        &self.restarts
    }

    pub fn epoch_count(&self) -> u64 {
        self.epoch_count
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    fn fresh_inner(&self, scale: f64) -> Result<Squint> {
        let mut inner = Squint::new(self.prior.clone(), scale)?;
        for comparator in &self.comparators {
            inner.register_comparator(comparator.clone())?;
        }
        Ok(inner)
    }

    pub fn round(&mut self, loss: &LossVector) -> Result<SupervisedRound> {
        self.round += 1;
        let played = self.prediction().to_vec();
        let regrets = instantaneous_expert_regrets(&played, loss.entries());
        let observed = regrets.iter().fold(0.0f64, |m, &r| m.max(r.abs()));
        self.global.observe(observed)?;
        let clipped = loss.scaled(self.global.clip_ratio());
        self.ledger
            .record_expert_round(&played, loss.entries(), clipped.entries());

        let mut restarted = false;
        let mut inner_round = None;
        match &mut self.inner {
            None => {
                if observed > 0.0 {
                    self.epoch_scale = self.global.current_max();
                    self.inner = Some(self.fresh_inner(self.epoch_scale)?);
                    self.epoch_count = 1;
                }
            }
            Some(inner) => {
                let record = inner.round(loss)?;
                inner_round = Some(record.round);
                if restart_triggered(&self.global, self.epoch_scale) {
                    self.restarts.push(RestartEvent {
                        round: self.round,
                        old_scale: self.epoch_scale,
                        new_scale: self.global.current_max(),
                    });
                    self.epoch_scale = self.global.current_max();
                    self.inner = Some(self.fresh_inner(self.epoch_scale)?);
                    self.epoch_count += 1;
                    restarted = true;
                }
            }
        }

        Ok(SupervisedRound {
            round: self.round,
            observed_scale: observed,
            scale_max: self.global.current_max(),
            restarted,
            prediction: self.prediction().to_vec(),
            inner_round,
            active_slaves: None,
            potential: None,
        })
    }
}

// ---------------------------------------------------------------------------
// Optimization wrapper
// ---------------------------------------------------------------------------

/// Scale-free ball-domain optimization: the restart wrapper around
/// [`MetaGrad`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleFreeMetaGrad {
    dimension: usize,
    diameter: f64,
    inner: Option<MetaGrad>,
    epoch_scale: f64,
    global: ScaleTracker,
    restarts: Vec<RestartEvent>,
    epoch_count: u64,
    round: u64,
    ledger: RegretLedger,
    comparators: Vec<ComparatorSpec>,
}

impl ScaleFreeMetaGrad {
    pub fn new(dimension: usize, diameter: f64) -> Result<Self> {
        // Validate the geometry eagerly.
        MetaGrad::new(&MetaGradConfig {
            dimension,
            diameter,
            initial_scale: 1.0,
        })?;
        Ok(Self {
            dimension,
            diameter,
            inner: None,
            epoch_scale: 0.0,
            global: ScaleTracker::unscaled(),
            restarts: Vec::new(),
            epoch_count: 0,
            round: 0,
            ledger: RegretLedger::new(LedgerMode::Oco { dimension }),
            comparators: Vec::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Next round's point: the origin before the first signal, the inner
    /// master prediction afterwards.
    pub fn prediction(&self) -> Vec<f64> {
        self.inner
            .as_ref()
            .map_or_else(|| vec![0.0; self.dimension], |m| m.prediction().to_vec())
    }

    pub fn register_comparator(&mut self, comparator: ComparatorSpec) -> Result<()> {
        self.ledger.register(comparator.clone())?;
        if let Some(inner) = &mut self.inner {
            inner.register_comparator(comparator.clone())?;
        }
        self.comparators.push(comparator);
        Ok(())
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    pub fn inner(&self) -> Option<&MetaGrad> {
        self.inner.as_ref()
    }

    pub fn global_scale(&self) -> &ScaleTracker {
        &self.global
    }

    pub fn restarts(&self) -> &[RestartEvent] {
        &self.restarts
    }

    pub fn epoch_count(&self) -> u64 {
        self.epoch_count
    }

    pub fn rounds(&self) -> u64 {
        self.round
    }

    fn fresh_inner(&self, scale: f64) -> Result<MetaGrad> {
        let mut inner = MetaGrad::new(&MetaGradConfig {
            dimension: self.dimension,
            diameter: self.diameter,
            initial_scale: scale,
        })?;
        for comparator in &self.comparators {
            inner.register_comparator(comparator.clone())?;
        }
        Ok(inner)
    }

    pub fn round(&mut self, gradient: &Gradient) -> Result<SupervisedRound> {
        self.round += 1;
        let played = self.prediction();
        let observed = self.diameter * gradient.norm();
        self.global.observe(observed)?;
        let clipped = gradient.scaled(self.global.clip_ratio());
        self.ledger
            .record_oco_round(&played, gradient.entries(), clipped.entries());

        let mut restarted = false;
        let mut inner_round = None;
        let mut active_slaves = None;
        let mut potential = None;
        match &mut self.inner {
            None => {
                if observed > 0.0 {
                    self.epoch_scale = self.global.current_max();
                    self.inner = Some(self.fresh_inner(self.epoch_scale)?);
                    self.epoch_count = 1;
                }
            }
            Some(inner) => {
                let record = inner.round(gradient)?;
                inner_round = Some(record.round);
                active_slaves = Some(record.active_slaves);
                potential = Some(record.potential);
                if restart_triggered(&self.global, self.epoch_scale) {
                    self.restarts.push(RestartEvent {
                        round: self.round,
                        old_scale: self.epoch_scale,
                        new_scale: self.global.current_max(),
                    });
                    self.epoch_scale = self.global.current_max();
                    self.inner = Some(self.fresh_inner(self.epoch_scale)?);
                    self.epoch_count += 1;
                    restarted = true;
                }
            }
        }

        Ok(SupervisedRound {
            round: self.round,
            observed_scale: observed,
            scale_max: self.global.current_max(),
            restarted,
            prediction: self.prediction(),
            inner_round,
            active_slaves,
            potential,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(values: &[f64]) -> LossVector {
        LossVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn plays_the_prior_until_the_first_signal() {
        let mut learner = ScaleFreeSquint::uniform(3).unwrap();
        // All-equal losses keep b = 0: no inner learner yet.
        for _ in 0..4 {
            let record = learner.round(&loss(&[2.0, 2.0, 2.0])).unwrap();
            assert_eq!(record.prediction, vec![1.0 / 3.0; 3]);
            assert_eq!(record.observed_scale, 0.0);
        }
        assert!(learner.inner().is_none());
        learner.round(&loss(&[0.0, 1.0, 1.0])).unwrap();
        assert!(learner.inner().is_some());
        assert_eq!(learner.epoch_count(), 1);
    }

    #[test]
    fn constant_scale_never_restarts() {
        let mut learner = ScaleFreeSquint::uniform(2).unwrap();
        for t in 0..200 {
            // Alternate which expert wins; the observed scale stays at the
            // same order.
            let l = if t % 2 == 0 { [0.0, 1.0] } else { [1.0, 0.0] };
            learner.round(&loss(&l)).unwrap();
        }
        assert!(learner.restarts().is_empty());
    }

    #[test]
    fn a_million_fold_jump_restarts_at_round_two() {
        let mut learner = ScaleFreeSquint::uniform(2).unwrap();
        let r1 = learner.round(&loss(&[0.0, 2.0])).unwrap();
        assert!(!r1.restarted);
        // b_2 = 1e6, B_2/B_1 = 1e6 > b_1/B_1 + b_2/B_2 = 2.
        let r2 = learner.round(&loss(&[0.0, 2e6])).unwrap();
        assert!(r2.restarted);
        assert_eq!(learner.restarts().len(), 1);
        assert_eq!(learner.restarts()[0].round, 2);
        assert_eq!(learner.epoch_count(), 2);
    }

    #[test]
    fn scaling_the_losses_rescales_nothing_observable() {
        let pattern: Vec<[f64; 2]> = (0..120)
            .map(|t| {
                let x = t as f64;
                [(0.37 * x).sin().abs() * 3.0, (0.53 * x).cos().abs()]
            })
            .collect();
        for c in [1e-3, 1e3] {
            let mut reference = ScaleFreeSquint::uniform(2).unwrap();
            let mut scaled = ScaleFreeSquint::uniform(2).unwrap();
            for row in &pattern {
                let a = reference.round(&loss(row)).unwrap();
                let b = scaled.round(&loss(&[row[0] * c, row[1] * c])).unwrap();
                assert_eq!(a.restarted, b.restarted);
                for (x, y) in a.prediction.iter().zip(&b.prediction) {
                    assert!(
                        (x - y).abs() <= 1e-9,
                        "predictions diverged under scaling by {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn metagrad_wrapper_restarts_and_stays_in_the_ball() {
        let mut learner = ScaleFreeMetaGrad::new(2, 2.0).unwrap();
        for t in 1..=150u64 {
            let x = t as f64;
            let scale = if t == 60 { 1e4 } else { 1.0 };
            let g = Gradient::new(vec![scale * (0.7 * x).sin(), scale * (0.3 * x).cos()]).unwrap();
            let record = learner.round(&g).unwrap();
            let norm: f64 = record.prediction.iter().map(|&v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-10);
            if let Some(p) = record.potential {
                assert!(p <= 1.0 + 1e-9);
            }
        }
        assert_eq!(learner.restarts().len(), 1);
        assert_eq!(learner.restarts()[0].round, 60);
    }

    #[test]
    fn geometric_scale_growth_restarts_logarithmically() {
        let mut learner = ScaleFreeSquint::uniform(2).unwrap();
        let horizon = 40u32;
        for t in 0..horizon {
            let scale = (2.0f64).powi(t as i32);
            learner.round(&loss(&[0.0, scale])).unwrap();
        }
        let total_growth = learner.global_scale().current_max()
            / learner.restarts().first().map_or(1.0, |r| r.old_scale);
        let cap = 2.0 + total_growth.log2();
        assert!(
            (learner.restarts().len() as f64) <= cap,
            "{} restarts > cap {cap}",
            learner.restarts().len()
        );
    }
}
