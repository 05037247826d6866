//! Baseline algorithms: fixed-rate exponential weights and
//! gradient-norm-adaptive projected gradient descent.

use crate::numeric::{softmax, CompensatedSum};
use crate::projection::{CenteredBall, DomainOracle};
use crate::{Error, Result};

/// Exponential weights with a fixed learning rate.
///
/// The oracle tuning `eta = sqrt(8 ln K / T) / range` needs the horizon
/// and the realized loss range up front; its regret against the best
/// expert is then at most `range * sqrt(T/2 * ln K)`. Feeding a range
/// guess that is too small inflates the rate and can blow the guarantee,
/// which is exactly the failure mode the adaptive learners avoid.
#[derive(Debug, Clone)]
pub struct Hedge {
    eta: f64,
    cumulative: Vec<CompensatedSum>,
}

impl Hedge {
    pub fn new(experts: usize, eta: f64) -> Result<Self> {
        if experts < 2 {
            return Err(Error::InvalidParameter {
                context: "Hedge",
                message: format!("need at least 2 experts, got {experts}"),
            });
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter {
                context: "Hedge",
                message: format!("learning rate must be positive, got {eta}"),
            });
        }
        Ok(Self {
            eta,
            cumulative: vec![CompensatedSum::new(); experts],
        })
    }

    /// Clairvoyant tuning for a known horizon and loss range.
    pub fn oracle_tuned(experts: usize, range: f64, horizon: u64) -> Result<Self> {
        let eta = (8.0 * (experts as f64).ln() / horizon as f64).sqrt() / range;
        Self::new(experts, eta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn prediction(&self) -> Vec<f64> {
        let log_weights: Vec<f64> = self
            .cumulative
            .iter()
            .map(|c| -self.eta * c.value())
            .collect();
        softmax(&log_weights)
    }

    pub fn round(&mut self, loss: &[f64]) -> Result<()> {
        if loss.len() != self.cumulative.len() {
            return Err(Error::DimensionMismatch {
                context: "Hedge::round",
                expected: self.cumulative.len(),
                actual: loss.len(),
            });
        }
        for (acc, &l) in self.cumulative.iter_mut().zip(loss) {
            acc.add(l);
        }
        Ok(())
    }
}

/// Projected gradient descent on a centered ball with the
/// gradient-norm-adaptive step `eta_t = D / sqrt(2 sum_{s<=t} ||g_s||^2)`,
/// guaranteeing regret at most `sqrt(2) * D * sqrt(sum_t ||g_t||^2)`.
#[derive(Debug, Clone)]
pub struct OgdAdaNorm {
    ball: CenteredBall,
    point: Vec<f64>,
    squared_norms: CompensatedSum,
}

impl OgdAdaNorm {
    pub fn new(dimension: usize, radius: f64) -> Result<Self> {
        if dimension == 0 || !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter {
                context: "OgdAdaNorm",
                message: format!("bad geometry: dimension {dimension}, radius {radius}"),
            });
        }
        Ok(Self {
            ball: CenteredBall { dimension, radius },
            point: vec![0.0; dimension],
            squared_norms: CompensatedSum::new(),
        })
    }

    pub fn prediction(&self) -> &[f64] {
        &self.point
    }

    /// `sum_{s<=t} ||g_s||^2`.
    pub fn cumulative_squared_norms(&self) -> f64 {
        self.squared_norms.value()
    }

    pub fn round(&mut self, gradient: &[f64]) -> Result<()> {
        if gradient.len() != self.point.len() {
            return Err(Error::DimensionMismatch {
                context: "OgdAdaNorm::round",
                expected: self.point.len(),
                actual: gradient.len(),
            });
        }
        self.squared_norms
            .add(gradient.iter().map(|&g| g * g).sum());
        let total = self.squared_norms.value();
        if total <= 0.0 {
            return Ok(());
        }
        let step = 2.0 * self.ball.radius / (2.0 * total).sqrt();
        let moved = nalgebra::DVector::from_iterator(
            self.point.len(),
            self.point.iter().zip(gradient).map(|(&w, &g)| w - step * g),
        );
        self.point = self.ball.project(&moved).as_slice().to_vec();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hedge_concentrates_on_the_better_expert() {
        let mut hedge = Hedge::oracle_tuned(2, 1.0, 100).unwrap();
        for _ in 0..100 {
            hedge.round(&[0.0, 1.0]).unwrap();
        }
        let p = hedge.prediction();
        assert!(p[0] > 0.99);
    }

    #[test]
    fn ogd_stays_in_the_ball_and_tracks_minima() {
        let mut ogd = OgdAdaNorm::new(2, 1.0).unwrap();
        // Quadratic pull toward (0.3, -0.4).
        let target = [0.3, -0.4];
        for _ in 0..500 {
            let w = ogd.prediction().to_vec();
            let g: Vec<f64> = w
                .iter()
                .zip(&target)
                .map(|(&w, &c)| 2.0 * (w - c))
                .collect();
            ogd.round(&g).unwrap();
            let norm: f64 = ogd.prediction().iter().map(|&x| x * x).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-12);
        }
        let w = ogd.prediction();
        assert!((w[0] - target[0]).abs() < 0.05);
        assert!((w[1] - target[1]).abs() < 0.05);
    }

    #[test]
    fn zero_gradients_leave_ogd_at_the_origin() {
        let mut ogd = OgdAdaNorm::new(3, 0.5).unwrap();
        ogd.round(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(ogd.prediction(), &[0.0, 0.0, 0.0]);
    }
}
