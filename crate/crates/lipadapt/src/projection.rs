//! Ball-constrained Mahalanobis projection and Euclidean domain oracles.
//!
//! A slave learner's projection step minimizes
//! `(z - u)' Sigma^{-1} (z - u)` over the centered ball of diameter `D`,
//! with metric `Sigma^{-1} = I/D^2 + 2 eta^2 G` for a positive
//! semidefinite Gram matrix `G`. Diagonalizing `G = Q diag(lambda) Q'`
//! reduces the problem to a scalar root-find: the projected point is
//!
//! ```text
//! u(x) = Q (x I + 2 eta^2 diag(lambda))^{-1} Q' v,        v = Sigma^{-1} z,
//! ```
//!
//! where `x` solves `rho(x) = sum_i c_i^2 / (x + 2 eta^2 lambda_i)^2 = D^2/4`
//! with `c = Q' v`. `rho` is strictly decreasing and convex on `(0, inf)`,
//! so a Newton iteration safeguarded by bisection cannot fail on a valid
//! bracket. `x = 1/D^2` reproduces the unprojected point, which gives the
//! left bracket end; the exact root of the zero-Gram case, `2 ||v|| / D`,
//! gives the right end.
//!
//! The module also provides Euclidean oracles for a few standard domains
//! and the reduction that runs a ball-domain learner on an arbitrary
//! bounded convex set at the cost of one Euclidean projection per round.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::core::Gradient;
use crate::metagrad::{MetaGrad, MetaGradRound};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Scalar root-find
// ---------------------------------------------------------------------------

/// Safeguarded Newton root-find for a strictly decreasing convex map.
///
/// `f` returns `(value, derivative)`. Requires `f(lo) > target > f(hi)`;
/// iterates from `hi` (Newton steps on a convex decreasing function
/// overshoot at most once, then converge monotonically), falling back to
/// bisection whenever an iterate leaves the current bracket. Returns `x`
/// with `|f(x) - target| <= tolerance`.
pub fn newton_root(
    f: impl Fn(f64) -> (f64, f64),
    target: f64,
    bracket: (f64, f64),
    tolerance: f64,
    max_iterations: u32,
) -> Result<NewtonOutcome> {
    let (mut lo, mut hi) = bracket;
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if (f_lo - target).abs() <= tolerance {
        return Ok(NewtonOutcome {
            root: lo,
            iterations: 0,
            residual: (f_lo - target).abs(),
        });
    }
    if (f_hi - target).abs() <= tolerance {
        return Ok(NewtonOutcome {
            root: hi,
            iterations: 0,
            residual: (f_hi - target).abs(),
        });
    }
    if !(f_lo > target && target > f_hi) {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            f_lo,
            f_hi,
            target,
        });
    }

    let mut x = hi;
    let mut best = (hi, (f_hi - target).abs());
    for iteration in 1..=max_iterations {
        let (value, derivative) = f(x);
        let residual = (value - target).abs();
        if residual < best.1 {
            best = (x, residual);
        }
        if residual <= tolerance {
            return Ok(NewtonOutcome {
                root: x,
                iterations: iteration,
                residual,
            });
        }
        if value > target {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - (value - target) / derivative;
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::ProjectionFailure {
        iterations: max_iterations,
        residual: best.1,
        lo,
        hi,
        metric_min: f64::NAN,
        metric_max: f64::NAN,
    })
}

/// Result of a scalar root-find.
#[derive(Debug, Clone, Copy)]
pub struct NewtonOutcome {
    pub root: f64,
    pub iterations: u32,
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Ball projector
// ---------------------------------------------------------------------------

/// Eigendecomposition of a slave's Gram matrix, reused for both the
/// metric inverse and the ball projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallProjector {
    diameter: f64,
    eigenbasis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    newton_tolerance: f64,
    max_newton_iters: u32,
}

/// Outcome of a projection call.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub point: DVector<f64>,
    /// Whether the point was outside the ball and actually projected.
    pub projected: bool,
    pub newton_iterations: u32,
    /// `|rho(x) - D^2/4|` at the returned multiplier (0 for interior points).
    pub residual: f64,
    /// The root `x` of the projection equation (`1/D^2` for interior points).
    pub multiplier: f64,
}

impl BallProjector {
    /// Relative residual tolerance for the root `rho(x) = D^2/4`,
    /// as a multiple of the target value.
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;
    pub const DEFAULT_MAX_ITERS: u32 = 50;

    pub fn from_gram(diameter: f64, gram: &DMatrix<f64>) -> Result<Self> {
        Self::with_options(
            diameter,
            gram,
            Self::DEFAULT_TOLERANCE,
            Self::DEFAULT_MAX_ITERS,
        )
    }

    pub fn with_options(
        diameter: f64,
        gram: &DMatrix<f64>,
        newton_tolerance: f64,
        max_newton_iters: u32,
    ) -> Result<Self> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidParameter {
                context: "BallProjector",
                message: format!("diameter must be positive, got {diameter}"),
            });
        }
        let eigen = gram.clone().symmetric_eigen();
        let scale = eigen.eigenvalues.amax().max(1.0);
        let mut eigenvalues = eigen.eigenvalues;
        for value in eigenvalues.iter_mut() {
            if *value < -1e-10 * scale {
                return Err(Error::NotPositiveDefinite {
                    min_eigenvalue: *value,
                });
            }
            *value = value.max(0.0);
        }
        Ok(Self {
            diameter,
            eigenbasis: eigen.eigenvectors,
            eigenvalues,
            newton_tolerance,
            max_newton_iters,
        })
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &DMatrix<f64> {
        &self.eigenbasis
    }

    fn metric_diagonal(&self, eta: f64, wake: Option<&DVector<f64>>) -> DVector<f64> {
        let d2 = self.diameter * self.diameter;
        self.eigenvalues.map_with_location(|i, _, lambda| {
            let lam = match wake {
                Some(w) => (lambda - w[i]).max(0.0),
                None => lambda,
            };
            1.0 / d2 + 2.0 * eta * eta * lam
        })
    }

    /// Applies `Sigma = (I/D^2 + 2 eta^2 G)^{-1}` to a vector.
    pub fn sigma_apply(&self, eta: f64, vector: &DVector<f64>) -> DVector<f64> {
        let diag = self.metric_diagonal(eta, None);
        let mut coords = self.eigenbasis.transpose() * vector;
        for i in 0..coords.len() {
            coords[i] /= diag[i];
        }
        &self.eigenbasis * coords
    }

    /// Smallest and largest eigenvalue of the metric `I/D^2 + 2 eta^2 G`.
    pub fn metric_range(&self, eta: f64) -> (f64, f64) {
        let diag = self.metric_diagonal(eta, None);
        (diag.min(), diag.max())
    }

    /// Mahalanobis projection onto the centered ball of radius `D/2`.
    ///
    /// `wake_eigenvalues`, when given, subtracts a wake-time spectrum from
    /// the stored one before building the metric; callers that store the
    /// Gram *difference* per slave (the default here) pass `None`.
    pub fn project(
        &self,
        unprojected: &DVector<f64>,
        eta: f64,
        wake_eigenvalues: Option<&DVector<f64>>,
    ) -> Result<ProjectionOutcome> {
        let radius = self.radius();
        let d2 = self.diameter * self.diameter;
        if unprojected.norm() <= radius {
            return Ok(ProjectionOutcome {
                point: unprojected.clone(),
                projected: false,
                newton_iterations: 0,
                residual: 0.0,
                multiplier: 1.0 / d2,
            });
        }

        let metric = self.metric_diagonal(eta, wake_eigenvalues);
        let offsets: Vec<f64> = metric.iter().map(|&m| m - 1.0 / d2).collect();
        // c = Q' v where v is the unprojected point premultiplied by the
        // metric; in the eigenbasis this is a diagonal scaling.
        let mut coords = self.eigenbasis.transpose() * unprojected;
        for i in 0..coords.len() {
            coords[i] *= metric[i];
        }

        let target = d2 / 4.0;
        let rho = |x: f64| {
            let mut value = 0.0;
            let mut derivative = 0.0;
            for i in 0..coords.len() {
                let denom = x + offsets[i];
                let term = coords[i] * coords[i] / (denom * denom);
                value += term;
                derivative -= 2.0 * term / denom;
            }
            (value, derivative)
        };

        // rho(1/D^2) = ||unprojected||^2 > D^2/4, and the zero-Gram root
        // 2||c||/D satisfies rho <= D^2/4, so the bracket is always valid.
        let lo = 1.0 / d2;
        let hi = (2.0 * coords.norm() / self.diameter).max(lo * (1.0 + 1e-12));
        let outcome = newton_root(
            rho,
            target,
            (lo, hi),
            self.newton_tolerance * target,
            self.max_newton_iters,
        )
        .map_err(|err| match err {
            Error::ProjectionFailure {
                iterations,
                residual,
                lo,
                hi,
                ..
            } => {
                let (metric_min, metric_max) = (metric.min(), metric.max());
                Error::ProjectionFailure {
                    iterations,
                    residual,
                    lo,
                    hi,
                    metric_min,
                    metric_max,
                }
            }
            other => other,
        })?;

        let mut point_coords = DVector::zeros(coords.len());
        for i in 0..coords.len() {
            point_coords[i] = coords[i] / (outcome.root + offsets[i]);
        }
        Ok(ProjectionOutcome {
            point: &self.eigenbasis * point_coords,
            projected: true,
            newton_iterations: outcome.iterations,
            residual: outcome.residual,
            multiplier: outcome.root,
        })
    }
}

// ---------------------------------------------------------------------------
// Euclidean domain oracles
// ---------------------------------------------------------------------------

/// Euclidean geometry of a bounded convex prediction domain: distance,
/// projection, and a distance subgradient.
pub trait DomainOracle {
    fn dimension(&self) -> usize;

    /// Euclidean diameter of the domain.
    fn diameter(&self) -> f64;

    /// Euclidean projection onto the domain.
    fn project(&self, point: &DVector<f64>) -> DVector<f64>;

    /// Distance `d(u) = min_{w in U} ||u - w||`.
    fn distance(&self, point: &DVector<f64>) -> f64 {
        (point - self.project(point)).norm()
    }

    /// A subgradient of the distance function: `0` inside the domain,
    /// `(u - proj(u)) / ||u - proj(u)||` outside.
    fn distance_subgradient(&self, point: &DVector<f64>) -> DVector<f64> {
        let projected = self.project(point);
        let offset = point - &projected;
        let norm = offset.norm();
        if norm <= 1e-12 * (1.0 + point.norm()) {
            DVector::zeros(point.len())
        } else {
            offset / norm
        }
    }

    fn contains(&self, point: &DVector<f64>, tolerance: f64) -> bool {
        self.distance(point) <= tolerance
    }
}

/// Ball of a given radius centered at the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenteredBall {
    pub dimension: usize,
    pub radius: f64,
}

impl DomainOracle for CenteredBall {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn project(&self, point: &DVector<f64>) -> DVector<f64> {
        let norm = point.norm();
        if norm <= self.radius {
            point.clone()
        } else {
            point * (self.radius / norm)
        }
    }
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainOracle for AxisBox {
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    fn project(&self, point: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            point.len(),
            point
                .iter()
                .enumerate()
                .map(|(i, &x)| x.clamp(self.lower[i], self.upper[i])),
        )
    }
}

/// Probability simplex `{ w : w_i >= 0, sum w_i = 1 }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilitySimplex {
    pub dimension: usize,
}

impl DomainOracle for ProbabilitySimplex {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn diameter(&self) -> f64 {
        core::f64::consts::SQRT_2
    }

    fn project(&self, point: &DVector<f64>) -> DVector<f64> {
        // Sort-based Euclidean projection: find the threshold theta with
        // sum_i max(v_i - theta, 0) = 1.
        let mut sorted: Vec<f64> = point.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
        let mut cumulative = 0.0;
        let mut theta = 0.0;
        for (j, &value) in sorted.iter().enumerate() {
            cumulative += value;
            let candidate = (cumulative - 1.0) / (j + 1) as f64;
            if value - candidate > 0.0 {
                theta = candidate;
            } else {
                break;
            }
        }
        point.map(|x| (x - theta).max(0.0))
    }
}

// ---------------------------------------------------------------------------
// Reduction of arbitrary bounded domains to the enclosing ball
// ---------------------------------------------------------------------------

/// The surrogate loss of the ball reduction:
/// `l(u) = (<g, u> + ||g|| d_U(u)) / 2`.
pub fn reduction_surrogate_loss(
    domain: &dyn DomainOracle,
    true_gradient: &[f64],
    point: &DVector<f64>,
) -> f64 {
    let g = DVector::from_column_slice(true_gradient);
    0.5 * (g.dot(point) + g.norm() * domain.distance(point))
}

/// Outcome of one reduced round.
#[derive(Debug, Clone)]
pub struct ReducedRound {
    /// The point actually played: the Euclidean projection of the inner
    /// learner's prediction onto the domain.
    pub played: DVector<f64>,
    /// The surrogate gradient fed to the inner learner.
    pub surrogate_gradient: Gradient,
    pub inner: MetaGradRound,
}

/// Runs one round of a ball-domain learner on an arbitrary bounded convex
/// domain.
///
/// The inner learner must operate on a centered ball enclosing the
/// domain. The caller reads the inner prediction `u_t`, plays
/// `w_t = proj_U(u_t)`, evaluates the true gradient there, and hands it
/// in; the inner learner then receives the surrogate gradient
/// `g_t = (g + ||g|| s) / 2` with `s` a distance subgradient at `u_t`
/// (zero inside the domain).
pub fn reduce_to_ball_round(
    domain: &dyn DomainOracle,
    inner: &mut MetaGrad,
    true_gradient: &Gradient,
) -> Result<ReducedRound> {
    if true_gradient.len() != inner.dimension() {
        return Err(Error::DimensionMismatch {
            context: "reduce_to_ball_round",
            expected: inner.dimension(),
            actual: true_gradient.len(),
        });
    }
    let prediction = DVector::from_column_slice(inner.prediction());
    let played = domain.project(&prediction);
    let subgradient = domain.distance_subgradient(&prediction);
    let norm = DVector::from_column_slice(true_gradient.entries()).norm();
    let surrogate: Vec<f64> = true_gradient
        .entries()
        .iter()
        .zip(subgradient.iter())
        .map(|(&g, &s)| 0.5 * (g + norm * s))
        .collect();
    let surrogate_gradient = Gradient::new(surrogate)?;
    let inner_round = inner.round(&surrogate_gradient)?;
    Ok(ReducedRound {
        played,
        surrogate_gradient,
        inner: inner_round,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_solves_the_isotropic_case() {
        // rho(x) = 1/x^2, target 1 (D = 2): root x = 1.
        let f = |x: f64| (1.0 / (x * x), -2.0 / (x * x * x));
        let out = newton_root(f, 1.0, (0.3, 2.0), 1e-12, 50).unwrap();
        assert!((out.root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn newton_two_dimensional_hand_case() {
        // rho(x) = 25/x^2 = 1 has root x = 5.
        let f = |x: f64| (25.0 / (x * x), -50.0 / (x * x * x));
        let out = newton_root(f, 1.0, (0.5, 5.0), 1e-12, 50).unwrap();
        assert!((out.root - 5.0).abs() < 1e-11);
    }

    #[test]
    fn newton_rejects_an_invalid_bracket() {
        let f = |x: f64| (1.0 / (x * x), -2.0 / (x * x * x));
        let err = newton_root(f, 1.0, (2.0, 3.0), 1e-12, 50).unwrap_err();
        match err {
            Error::InvalidBracket { f_lo, f_hi, .. } => {
                assert!((f_lo - 0.25).abs() < 1e-15);
                assert!((f_hi - 1.0 / 9.0).abs() < 1e-15);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn interior_points_pass_through() {
        let gram = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let projector = BallProjector::from_gram(2.0, &gram).unwrap();
        let z = DVector::from_vec(vec![0.3, -0.4]);
        let out = projector.project(&z, 0.2, None).unwrap();
        assert!(!out.projected);
        assert_eq!(out.point, z);
    }

    #[test]
    fn zero_gram_projection_is_radial_scaling() {
        let gram = DMatrix::zeros(3, 3);
        let projector = BallProjector::from_gram(2.0, &gram).unwrap();
        let z = DVector::from_vec(vec![3.0, 0.0, 4.0]);
        let out = projector.project(&z, 0.7, None).unwrap();
        assert!(out.projected);
        let expected = &z * (1.0 / z.norm());
        assert!((out.point - expected).norm() < 1e-12);
    }

    #[test]
    fn projection_lands_on_the_boundary_with_tiny_residual() {
        let gram = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let projector = BallProjector::from_gram(2.0, &gram).unwrap();
        let z = DVector::from_vec(vec![5.0, -7.0]);
        let out = projector.project(&z, 0.3, None).unwrap();
        assert!((out.point.norm() - 1.0).abs() < 1e-10);
        assert!(out.residual <= 1e-12);
        assert!(out.newton_iterations <= 50);
    }

    #[test]
    fn indefinite_gram_is_rejected() {
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(
            BallProjector::from_gram(2.0, &gram),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn sigma_apply_inverts_the_metric() {
        let gram = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let projector = BallProjector::from_gram(3.0, &gram).unwrap();
        let eta = 0.11;
        let v = DVector::from_vec(vec![0.4, -1.2]);
        let metric = DMatrix::identity(2, 2) / 9.0 + 2.0 * eta * eta * &gram;
        let recovered = metric * projector.sigma_apply(eta, &v);
        assert!((recovered - v).norm() < 1e-12);
    }

    #[test]
    fn simplex_projection_matches_known_cases() {
        let simplex = ProbabilitySimplex { dimension: 3 };
        // Already on the simplex.
        let p = DVector::from_vec(vec![0.2, 0.5, 0.3]);
        assert!((simplex.project(&p) - &p).norm() < 1e-15);
        // Dominant coordinate collapses to a vertex.
        let far = DVector::from_vec(vec![5.0, 0.0, 0.0]);
        let proj = simplex.project(&far);
        assert!((proj - DVector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-15);
        // Projection of the origin is uniform.
        let origin = DVector::zeros(3);
        let proj = simplex.project(&origin);
        for i in 0..3 {
            assert!((proj[i] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_oracle_contract() {
        let oracles: Vec<Box<dyn DomainOracle>> = vec![
            Box::new(CenteredBall {
                dimension: 3,
                radius: 0.8,
            }),
            Box::new(AxisBox {
                lower: vec![-1.0, 0.0, 0.5],
                upper: vec![1.0, 2.0, 0.75],
            }),
            Box::new(ProbabilitySimplex { dimension: 3 }),
        ];
        let points = [
            DVector::from_vec(vec![0.1, 0.4, 0.6]),
            DVector::from_vec(vec![3.0, -2.0, 1.5]),
            DVector::from_vec(vec![-0.3, 0.9, 0.2]),
        ];
        for oracle in &oracles {
            for point in &points {
                let projected = oracle.project(point);
                // Projection is idempotent and distance-consistent.
                assert!(oracle.distance(&projected) < 1e-10);
                let d = oracle.distance(point);
                assert_eq!(d == 0.0, (point - &projected).norm() == 0.0);
                let sub = oracle.distance_subgradient(point);
                assert!(sub.norm() <= 1.0 + 1e-12);
                if d > 1e-9 {
                    let expected = (point - &projected) / d;
                    assert!((sub - expected).norm() < 1e-9);
                }
            }
        }
    }
}
