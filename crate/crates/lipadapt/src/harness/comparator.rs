//! Offline comparators: the best fixed decision in hindsight.

use nalgebra::DVector;

use super::env::{OcoLoss, Setting};
use super::trace::ExperimentTrace;
use crate::core::ComparatorSpec;
use crate::numeric::CompensatedSum;
use crate::projection::DomainOracle;
use crate::{Error, Result};

/// Index of the expert with the smallest cumulative loss (lowest index on
/// ties).
pub fn best_expert(losses: &[Vec<f64>]) -> Result<usize> {
    let first = losses
        .first()
        .ok_or(Error::EmptyTrace("no expert rounds"))?;
    let mut totals = vec![CompensatedSum::new(); first.len()];
    for round in losses {
        for (acc, &l) in totals.iter_mut().zip(round) {
            acc.add(l);
        }
    }
    let mut best = 0;
    for (k, acc) in totals.iter().enumerate() {
        if acc.value() < totals[best].value() {
            best = k;
        }
    }
    Ok(best)
}

/// Cumulative per-expert losses.
pub fn cumulative_expert_losses(losses: &[Vec<f64>]) -> Vec<f64> {
    if losses.is_empty() {
        return Vec::new();
    }
    let mut totals = vec![CompensatedSum::new(); losses[0].len()];
    for round in losses {
        for (acc, &l) in totals.iter_mut().zip(round) {
            acc.add(l);
        }
    }
    totals.iter().map(|a| a.value()).collect()
}

fn mean_gradient(losses: &[OcoLoss], point: &DVector<f64>) -> DVector<f64> {
    let slice = point.as_slice();
    let mut total = DVector::zeros(point.len());
    for loss in losses {
        total += DVector::from_vec(loss.gradient(slice));
    }
    total / losses.len() as f64
}

fn mean_value(losses: &[OcoLoss], point: &DVector<f64>) -> f64 {
    let slice = point.as_slice();
    losses.iter().map(|l| l.value(slice)).sum::<f64>() / losses.len() as f64
}

/// Minimizer of the summed losses over the domain, by projected gradient
/// descent: a decaying-step phase (200 iterations at step `D/sqrt(j)`
/// per unit gradient), then a fixed-step polish with backtracking until
/// the gradient-mapping norm drops below 1e-8.
pub fn offline_oco_comparator(losses: &[OcoLoss], domain: &dyn DomainOracle) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(Error::EmptyTrace("no optimization rounds"));
    }
    let dimension = losses[0].dimension();
    let mut point = domain.project(&DVector::zeros(dimension));

    for j in 1..=200u32 {
        let gradient = mean_gradient(losses, &point);
        let norm = gradient.norm();
        if norm <= 1e-14 {
            break;
        }
        let step = domain.diameter() / (f64::from(j).sqrt() * norm);
        let next = domain.project(&(&point - gradient * step));
        if (&next - &point).norm() <= 1e-10 {
            point = next;
            break;
        }
        point = next;
    }

    // Polish: drive the gradient mapping to zero with backtracking.
    let mut step = 1.0;
    for _ in 0..2000 {
        let gradient = mean_gradient(losses, &point);
        let candidate = domain.project(&(&point - &gradient * step));
        let mapping_norm = (&point - &candidate).norm() / step;
        if mapping_norm <= 1e-8 {
            break;
        }
        if mean_value(losses, &candidate) <= mean_value(losses, &point) {
            point = candidate;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    Ok(point.as_slice().to_vec())
}

/// Offline comparator of a completed trace: the best expert in the
/// expert setting, the projected-gradient minimizer of the summed losses
/// in the optimization setting.
pub fn compute_offline_comparator(
    trace: &ExperimentTrace,
    domain: Option<&dyn DomainOracle>,
) -> Result<ComparatorSpec> {
    match trace.setting {
        Setting::Expert => Ok(ComparatorSpec::Expert(best_expert(&trace.expert_losses)?)),
        Setting::Oco => {
            let domain = domain.ok_or(Error::EmptyTrace(
                "optimization comparators need a domain oracle",
            ))?;
            Ok(ComparatorSpec::Point(offline_oco_comparator(
                &trace.oco_losses,
                domain,
            )?))
        }
    }
}

/// Gradient-mapping norm at a point, the PGD stationarity certificate.
pub fn gradient_mapping_norm(losses: &[OcoLoss], domain: &dyn DomainOracle, point: &[f64]) -> f64 {
    let point = DVector::from_column_slice(point);
    let step = 1.0;
    let gradient = mean_gradient(losses, &point);
    let candidate = domain.project(&(&point - gradient * step));
    (&point - &candidate).norm() / step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{CenteredBall, ProbabilitySimplex};

    #[test]
    fn dominating_expert_wins() {
        let losses = vec![vec![0.9, 0.1, 0.5]; 20];
        assert_eq!(best_expert(&losses).unwrap(), 1);
    }

    #[test]
    fn quadratic_minimizer_is_the_projected_mean() {
        // Centers average to (0.6, 0.8) with norm 1 > radius 0.5: the
        // offline comparator is the radial projection.
        let losses = vec![
            OcoLoss::Quadratic {
                center: vec![0.4, 0.6],
                weight: 1.0,
            },
            OcoLoss::Quadratic {
                center: vec![0.8, 1.0],
                weight: 1.0,
            },
        ];
        let ball = CenteredBall {
            dimension: 2,
            radius: 0.5,
        };
        let u = offline_oco_comparator(&losses, &ball).unwrap();
        assert!((u[0] - 0.3).abs() < 1e-7, "{u:?}");
        assert!((u[1] - 0.4).abs() < 1e-7, "{u:?}");
        assert!(gradient_mapping_norm(&losses, &ball, &u) <= 1e-8);
    }

    #[test]
    fn linear_minimizer_on_the_simplex_is_the_best_vertex() {
        let losses = vec![OcoLoss::Linear {
            direction: vec![0.9, 0.2, 0.7],
        }];
        let simplex = ProbabilitySimplex { dimension: 3 };
        let u = offline_oco_comparator(&losses, &simplex).unwrap();
        assert!((u[1] - 1.0).abs() < 1e-8, "{u:?}");
    }

    #[test]
    fn linear_minimizer_on_the_ball_matches_the_closed_form() {
        let losses = vec![
            OcoLoss::Linear {
                direction: vec![1.0, -2.0],
            },
            OcoLoss::Linear {
                direction: vec![2.0, -1.0],
            },
        ];
        let ball = CenteredBall {
            dimension: 2,
            radius: 1.0,
        };
        let u = offline_oco_comparator(&losses, &ball).unwrap();
        // Mean direction (1.5, -1.5): minimizer -r * normalized.
        let expected = [-1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()];
        assert!((u[0] - expected[0]).abs() < 1e-7, "{u:?}");
        assert!((u[1] - expected[1]).abs() < 1e-7, "{u:?}");
    }
}
