//! Small numeric building blocks: compensated summation and stable
//! exponential weighting.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
///
/// Cumulative regret and variance statistics are accumulated over up to
/// ~1e5 rounds and then compared against independently recomputed values
/// at 1e-9 relative tolerance, which plain f64 accumulation does not
/// reliably survive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_value(value: f64) -> Self {
        Self {
            sum: value,
            compensation: 0.0,
        }
    }

    pub fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for term in iter {
            acc.add(term);
        }
        acc
    }
}

/// Compensated sum of an iterator, returned as a plain f64.
pub fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(sum(exp(x_i)))` without overflow. Returns `-inf` on an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes log-scale weights into a probability vector.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|&lw| (lw - lse).exp()).collect()
}

/// Dot product with compensated accumulation.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    stable_sum(a.iter().zip(b).map(|(&x, &y)| x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_mass() {
        let mut acc = CompensatedSum::new();
        let mut plain = 0.0f64;
        acc.add(1.0);
        plain += 1.0;
        for _ in 0..10 {
            acc.add(1e-16);
            plain += 1e-16;
        }
        acc.add(-1.0);
        plain += -1.0;
        // Plain accumulation swallows the small terms entirely.
        assert_eq!(plain, 0.0);
        assert!((acc.value() - 1e-15).abs() < 1e-25);
    }

    #[test]
    fn log_sum_exp_handles_large_inputs() {
        let v = [1000.0, 1000.0 + (2.0f64).ln()];
        assert!((log_sum_exp(&v) - (1000.0 + (3.0f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn softmax_normalizes() {
        let w = softmax(&[-700.0, -701.0, -699.0]);
        let total: f64 = w.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(w[2] > w[0] && w[0] > w[1]);
    }
}
