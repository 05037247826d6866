//! Randomized invariant suites, shared by the `verify` CLI subcommand
//! and the acceptance tests.
//!
//! Every suite is deterministic (fixed seeds through [`Sampler`]) and
//! returns one [`CheckOutcome`] per named check. The brute-force oracles
//! used as reference implementations live here so both surfaces exercise
//! the same code.

use nalgebra::{DMatrix, DVector};

use super::env::{OcoLoss, Sampler};
use crate::core::{ComparatorSpec, Gradient, LossVector};
use crate::metagrad::{surrogate_loss, LearningRateGrid, MetaGrad, MetaGradConfig};
use crate::numeric::{softmax, CompensatedSum};
use crate::projection::{BallProjector, CenteredBall, DomainOracle, ProbabilitySimplex};
use crate::quadrature::adaptive_gauss_kronrod;
use crate::restart::{ScaleFreeMetaGrad, ScaleFreeSquint};
use crate::squint::{weights_from_statistics, Squint};

/// One named check with a human-readable detail line.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

// ---------------------------------------------------------------------------
// Reference oracles
// ---------------------------------------------------------------------------

/// Exponent-shifted adaptive quadrature of
/// `ln integral_0^a exp(eta r - eta^2 v) d eta`; independent of the
/// closed-form error-function path.
///
/// The integrand can be a spike far narrower than the interval, which
/// blind adaptive refinement never notices (every node evaluates to
/// zero). Knots bracketing the peak force segments where the spike is
/// resolved.
pub fn quadrature_log_integral(r: f64, v: f64, a: f64) -> f64 {
    let phi = |eta: f64| eta * r - eta * eta * v;
    let (location, width) = if v > 0.0 {
        ((r / (2.0 * v)).clamp(0.0, a), 1.0 / v.sqrt())
    } else if r > 0.0 {
        (a, 1.0 / r)
    } else if r < 0.0 {
        (0.0, -1.0 / r)
    } else {
        (0.0, a)
    };
    let shift = phi(location).max(0.0).max(phi(a));

    let mut knots = vec![0.0, a];
    for multiple in [-30.0, -1.0, 1.0, 30.0] {
        let knot = location + multiple * width;
        if knot > 0.0 && knot < a {
            knots.push(knot);
        }
    }
    knots.sort_by(|x, y| x.partial_cmp(y).expect("finite knots"));

    let mut total = CompensatedSum::new();
    for pair in knots.windows(2) {
        let segment = adaptive_gauss_kronrod(
            |eta| (phi(eta) - shift).exp(),
            pair[0],
            pair[1],
            1e-14,
            1e-13,
        );
        total.add(segment.value);
    }
    shift + total.value().ln()
}

/// Expert weights through the quadrature route.
pub fn quadrature_weights(prior: &[f64], regrets: &[f64], variances: &[f64], a: f64) -> Vec<f64> {
    let log_weights: Vec<f64> = prior
        .iter()
        .zip(regrets.iter().zip(variances))
        .map(|(&p, (&r, &v))| p.ln() + quadrature_log_integral(r, v, a))
        .collect();
    softmax(&log_weights)
}

/// Brute-force Mahalanobis ball projection: projected gradient descent on
/// `(z - u)' A (z - u)` over `||u|| <= radius`, with the step set from a
/// Gershgorin bound on `A`. Uses only matrix-vector products, so it is
/// independent of the eigendecomposition-plus-root-find production path.
pub fn brute_force_ball_projection(
    metric: &DMatrix<f64>,
    target: &DVector<f64>,
    radius: f64,
    iterations: u32,
) -> DVector<f64> {
    let n = target.len();
    let mut row_bound = 0.0f64;
    for i in 0..n {
        let sum: f64 = (0..n).map(|j| metric[(i, j)].abs()).sum();
        row_bound = row_bound.max(sum);
    }
    let step = 1.0 / (2.0 * row_bound);
    let ball = CenteredBall {
        dimension: n,
        radius,
    };
    let mut point = ball.project(target);
    for _ in 0..iterations {
        let gradient = metric * (&point - target) * 2.0;
        point = ball.project(&(&point - gradient * step));
    }
    point
}

/// Pure bisection to `|f(x) - target| <= tol`, for cross-checking the
/// Newton path.
pub fn bisection_root(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    steps: u32,
) -> f64 {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Expert suite
// ---------------------------------------------------------------------------

fn random_expert_stream(
    sampler: &mut Sampler,
    experts: usize,
    horizon: usize,
    jumps: bool,
) -> Vec<Vec<f64>> {
    let jump_round = if jumps {
        1 + sampler.range(horizon)
    } else {
        horizon + 1
    };
    let jump_factor = if sampler.sign() > 0.0 { 10.0 } else { 100.0 };
    let mut scale = 1.0;
    (0..horizon)
        .map(|t| {
            if t + 1 == jump_round {
                scale *= jump_factor;
            }
            (0..experts).map(|_| scale * sampler.uniform01()).collect()
        })
        .collect()
}

/// Expert-side invariants: the per-round potential bound over at least
/// 100 random streams with scale jumps, closed-form/quadrature weight
/// agreement, timelessness, joint scale invariance, and the clipping
/// identity.
pub fn squint_suite() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    let mut sampler = Sampler::new(0x5109);

    // Potential bound on every round of every stream.
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_at = String::new();
    let mut streams = 0usize;
    let mut failed = false;
    for batch in 0..34u64 {
        for &experts in &[2usize, 5, 16] {
            let horizon = match batch % 3 {
                0 => 120,
                1 => 300,
                _ => 500,
            };
            let stream = random_expert_stream(&mut sampler, experts, horizon, true);
            let initial_scale = [0.2, 1.0, 5.0][(batch % 3) as usize];
            let mut learner = Squint::uniform(experts, initial_scale).unwrap();
            streams += 1;
            for (t, row) in stream.iter().enumerate() {
                learner
                    .round(&LossVector::new(row.clone()).unwrap())
                    .unwrap();
                let budget = (learner.scale().previous_max() / initial_scale).ln();
                let gap = learner.potential() - budget;
                if gap > worst_gap {
                    worst_gap = gap;
                    worst_at = format!("K={experts}, T={}, round {}", horizon, t + 1);
                }
                if gap > 1e-9 {
                    failed = true;
                }
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "expert potential bound",
        !failed,
        format!("{streams} streams; worst potential excess {worst_gap:.3e} at {worst_at}"),
    ));

    // Closed form vs quadrature on 200 random states with |R| up to 500.
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let experts = 2 + sampler.range(7);
        let scale = sampler.uniform(0.5, 100.0);
        let upper = 1.0 / (2.0 * scale);
        let prior: Vec<f64> = {
            let raw: Vec<f64> = (0..experts).map(|_| sampler.uniform(0.05, 1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / total).collect()
        };
        let regrets: Vec<f64> = (0..experts)
            .map(|_| sampler.uniform(-500.0, 500.0))
            .collect();
        let variances: Vec<f64> = regrets
            .iter()
            .map(|&r| sampler.uniform01() * 2.0 * r.abs() * scale + sampler.uniform01())
            .collect();
        let closed = weights_from_statistics(&prior, &regrets, &variances, upper).unwrap();
        let oracle = quadrature_weights(&prior, &regrets, &variances, upper);
        for (c, o) in closed.iter().zip(&oracle) {
            worst = worst.max((c - o).abs());
        }
    }
    outcomes.push(CheckOutcome::new(
        "closed-form weights match quadrature",
        worst <= 1e-8,
        format!("200 states; worst coordinate difference {worst:.3e}"),
    ));

    // Timelessness: a constant-loss round changes nothing downstream.
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let experts = 2 + sampler.range(6);
        let stream = random_expert_stream(&mut sampler, experts, 60, false);
        let insert_at = 1 + sampler.range(58);
        let mut plain = Squint::uniform(experts, 1.0).unwrap();
        let mut padded = Squint::uniform(experts, 1.0).unwrap();
        for (t, row) in stream.iter().enumerate() {
            if t == insert_at {
                padded
                    .round(&LossVector::new(vec![3.25; experts]).unwrap())
                    .unwrap();
            }
            let loss = LossVector::new(row.clone()).unwrap();
            let a = plain.round(&loss).unwrap();
            let b = padded.round(&loss).unwrap();
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                worst = worst.max((x - y).abs());
            }
        }
        let _ = trial;
    }
    outcomes.push(CheckOutcome::new(
        "timelessness",
        worst <= 1e-12,
        format!("20 insertions; worst prediction shift {worst:.3e}"),
    ));

    // Joint scaling of losses and the scale input changes nothing.
    let mut worst = 0.0f64;
    for &factor in &[1e-3, 1e3] {
        let stream = random_expert_stream(&mut sampler, 4, 80, true);
        let mut base = Squint::uniform(4, 1.0).unwrap();
        let mut scaled = Squint::uniform(4, factor).unwrap();
        for row in &stream {
            let a = base.round(&LossVector::new(row.clone()).unwrap()).unwrap();
            let b = scaled
                .round(&LossVector::new(row.iter().map(|&l| l * factor).collect()).unwrap())
                .unwrap();
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "joint scale invariance",
        worst <= 1e-10,
        format!("factors 1e-3 and 1e3; worst prediction shift {worst:.3e}"),
    ));

    // Clipping identity per round for every point mass.
    let mut worst = f64::NEG_INFINITY;
    let mut failed = false;
    for _ in 0..10 {
        let experts = 2 + sampler.range(6);
        let stream = random_expert_stream(&mut sampler, experts, 120, true);
        let mut learner = Squint::uniform(experts, 1.0).unwrap();
        for k in 0..experts {
            learner
                .register_comparator(ComparatorSpec::Expert(k))
                .unwrap();
        }
        for row in &stream {
            learner
                .round(&LossVector::new(row.clone()).unwrap())
                .unwrap();
            let budget = learner.scale().current_max() - learner.scale().initial_scale().unwrap();
            for (_, account) in learner.ledger().accounts() {
                let gap = account.regret() - account.clipped_regret() - budget;
                worst = worst.max(gap);
                if gap > 1e-9 {
                    failed = true;
                }
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "expert clipping identity",
        !failed,
        format!("worst identity excess {worst:.3e}"),
    ));

    outcomes
}

// ---------------------------------------------------------------------------
// Optimization suite
// ---------------------------------------------------------------------------

fn random_oco_stream(
    sampler: &mut Sampler,
    dimension: usize,
    horizon: usize,
    jumps: bool,
) -> Vec<OcoLoss> {
    let jump_round = if jumps {
        1 + sampler.range(horizon)
    } else {
        horizon + 1
    };
    let jump_factor = if sampler.sign() > 0.0 { 10.0 } else { 100.0 };
    let quadratic = sampler.sign() > 0.0;
    let mut scale = 1.0;
    (0..horizon)
        .map(|t| {
            if t + 1 == jump_round {
                scale *= jump_factor;
            }
            if quadratic {
                OcoLoss::Quadratic {
                    center: sampler.ball(dimension, 0.5),
                    weight: scale,
                }
            } else {
                let magnitude = scale * sampler.uniform01_open_low();
                OcoLoss::Linear {
                    direction: sampler
                        .sphere(dimension)
                        .into_iter()
                        .map(|x| magnitude * x)
                        .collect(),
                }
            }
        })
        .collect()
}

/// Optimization-side invariants: the potential bound and the slave-count
/// bound on every round of at least 100 random streams, the master
/// staying inside the ball, the pseudo-regret clipping identity, and
/// incremental-vs-recomputed log-weight agreement.
pub fn metagrad_suite() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    let mut sampler = Sampler::new(0x36714);

    let mut worst_potential = f64::NEG_INFINITY;
    let mut slave_violations = 0u64;
    let mut ball_violations = 0u64;
    let mut clip_violations = 0u64;
    let mut streams = 0usize;
    let mut potential_failed = false;
    for batch in 0..26u64 {
        for &dimension in &[1usize, 2, 5, 16] {
            let horizon = match batch % 3 {
                0 => 150,
                1 => 400,
                _ => 500,
            };
            streams += 1;
            let stream = random_oco_stream(&mut sampler, dimension, horizon, true);
            let config = MetaGradConfig {
                dimension,
                diameter: 2.0,
                initial_scale: [0.2, 1.0, 5.0][(batch % 3) as usize],
            };
            let mut learner = MetaGrad::new(&config).unwrap();
            learner
                .register_comparator(ComparatorSpec::Point(vec![0.0; dimension]))
                .unwrap();
            for (t, loss) in stream.iter().enumerate() {
                let prediction = learner.prediction().to_vec();
                let gradient = Gradient::new(loss.gradient(&prediction)).unwrap();
                let record = learner.round(&gradient).unwrap();
                let excess = record.potential - 1.0;
                worst_potential = worst_potential.max(excess);
                if excess > 1e-9 {
                    potential_failed = true;
                }
                let cap = ((t + 1) as f64).log2().floor() as usize;
                if record.active_slaves > cap {
                    slave_violations += 1;
                }
                let norm: f64 = record.prediction.iter().map(|&x| x * x).sum::<f64>().sqrt();
                if norm > 1.0 + 1e-10 {
                    ball_violations += 1;
                }
                let account = learner.ledger().account(0);
                if account.regret() - account.clipped_regret()
                    > record.scale_max - config.initial_scale + 1e-9
                {
                    clip_violations += 1;
                }
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "optimization potential bound",
        !potential_failed,
        format!("{streams} streams; worst potential excess {worst_potential:.3e}"),
    ));
    outcomes.push(CheckOutcome::new(
        "active slave count bound",
        slave_violations == 0,
        format!("{slave_violations} violations of floor(log2 t)"),
    ));
    outcomes.push(CheckOutcome::new(
        "master prediction in ball",
        ball_violations == 0,
        format!("{ball_violations} predictions left the ball"),
    ));
    outcomes.push(CheckOutcome::new(
        "pseudo-regret clipping identity",
        clip_violations == 0,
        format!("{clip_violations} violations of the scale-growth budget"),
    ));

    // Incremental log-weights match an independent accumulation.
    let mut worst_rel = 0.0f64;
    for _ in 0..4 {
        let dimension = 1 + sampler.range(3);
        let stream = random_oco_stream(&mut sampler, dimension, 300, true);
        let config = MetaGradConfig {
            dimension,
            diameter: 2.0,
            initial_scale: 1.0,
        };
        let mut learner = MetaGrad::new(&config).unwrap();
        let mut shadow: std::collections::BTreeMap<u32, CompensatedSum> =
            std::collections::BTreeMap::new();
        for loss in &stream {
            let prediction = DVector::from_column_slice(learner.prediction());
            let gradient = loss.gradient(prediction.as_slice());
            // Recompute the clip ratio the round will use.
            let norm: f64 = gradient.iter().map(|&g| g * g).sum::<f64>().sqrt();
            let observed = config.diameter * norm;
            let old_max = learner.scale().current_max();
            let ratio = old_max / old_max.max(observed);
            let snapshot: Vec<(u32, f64, DVector<f64>)> = learner
                .active_slaves()
                .iter()
                .map(|s| (s.index(), s.eta(), s.mean().clone()))
                .collect();
            for (index, eta, mean) in &snapshot {
                let clipped: Vec<f64> = gradient.iter().map(|&g| ratio * g).collect();
                let regret = (&prediction - mean).dot(&DVector::from_vec(clipped));
                shadow
                    .entry(*index)
                    .or_default()
                    .add(surrogate_loss(*eta, regret));
            }
            learner.round(&Gradient::new(gradient).unwrap()).unwrap();
        }
        for slave in learner.active_slaves() {
            if let Some(total) = shadow.get(&slave.index()) {
                let expected = LearningRateGrid::prior(slave.index()).ln() - total.value();
                let rel = (slave.log_weight() - expected).abs() / expected.abs().max(1.0);
                worst_rel = worst_rel.max(rel);
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "log-weight consistency",
        worst_rel <= 1e-9,
        format!("worst relative drift {worst_rel:.3e}"),
    ));

    outcomes
}

// ---------------------------------------------------------------------------
// Projection suite
// ---------------------------------------------------------------------------

fn random_psd(sampler: &mut Sampler, dimension: usize, magnitude: f64) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(dimension, dimension, |_, _| sampler.uniform(-1.0, 1.0));
    let psd = &raw * raw.transpose();
    psd * (magnitude / dimension as f64)
}

/// Projection invariants: agreement with the brute-force minimizer on
/// 500 random instances, Newton residual and iteration caps, Lagrangian
/// stationarity, bracket monotonicity, Newton-vs-bisection agreement,
/// and the reduction's surrogate-loss inequality.
pub fn projection_suite() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    let mut sampler = Sampler::new(0x9807);

    let mut worst_coord = 0.0f64;
    let mut residual_failures = 0u64;
    let mut iteration_failures = 0u64;
    let mut bracket_failures = 0u64;
    let mut worst_angle = 0.0f64;
    let dims = [1usize, 2, 3, 5];
    for i in 0..500u32 {
        let dimension = dims[(i as usize) % dims.len()];
        let diameter = [1.0, 2.0, 5.0][(i as usize) % 3];
        let magnitude = sampler.uniform(0.0, 10.0);
        let gram = random_psd(&mut sampler, dimension, magnitude);
        let eta = sampler.uniform(0.01, 0.6);
        let radius = diameter / 2.0;
        // Mix interior and exterior points, biased exterior.
        let reach = if i % 5 == 0 { 0.8 } else { 3.0 };
        let target = DVector::from_vec(sampler.ball(dimension, reach * radius));

        let projector = BallProjector::from_gram(diameter, &gram).unwrap();
        let outcome = projector.project(&target, eta, None).unwrap();
        let metric = DMatrix::identity(dimension, dimension) / (diameter * diameter)
            + &gram * (2.0 * eta * eta);
        let oracle = brute_force_ball_projection(&metric, &target, radius, 40_000);
        worst_coord = worst_coord.max((&outcome.point - &oracle).amax());

        if outcome.projected {
            if outcome.residual > 1e-10 * diameter * diameter {
                residual_failures += 1;
            }
            if outcome.newton_iterations > 50 {
                iteration_failures += 1;
            }
            // Monotone bracket: the projection equation decreases from
            // the unprojected norm to below the target.
            if target.norm() * target.norm() <= diameter * diameter / 4.0 {
                bracket_failures += 1;
            }
            // Stationarity: the metric gradient at the solution is
            // antiparallel to the solution.
            let gradient = &metric * (&outcome.point - &target) * 2.0;
            let sum = gradient.normalize() + outcome.point.normalize();
            worst_angle = worst_angle.max(sum.norm());
        }
    }
    outcomes.push(CheckOutcome::new(
        "projection matches brute force",
        worst_coord <= 1e-6,
        format!("500 instances; worst coordinate gap {worst_coord:.3e}"),
    ));
    outcomes.push(CheckOutcome::new(
        "root-find residual cap",
        residual_failures == 0,
        format!("{residual_failures} residuals above 1e-10 D^2"),
    ));
    outcomes.push(CheckOutcome::new(
        "root-find iteration cap",
        iteration_failures == 0,
        format!("{iteration_failures} instances above 50 iterations"),
    ));
    outcomes.push(CheckOutcome::new(
        "bracket validity",
        bracket_failures == 0,
        format!("{bracket_failures} projected points were actually interior"),
    ));
    outcomes.push(CheckOutcome::new(
        "projection stationarity",
        worst_angle <= 1e-8,
        format!("worst angular defect {worst_angle:.3e}"),
    ));

    // Newton vs pure bisection on random scalar instances.
    let mut worst_gap = 0.0f64;
    for _ in 0..200 {
        let terms = 1 + sampler.range(5);
        let coefficients: Vec<f64> = (0..terms).map(|_| sampler.uniform(0.1, 3.0)).collect();
        let offsets: Vec<f64> = (0..terms).map(|_| sampler.uniform(0.0, 2.0)).collect();
        let rho = |x: f64| {
            let mut value = 0.0;
            let mut derivative = 0.0;
            for (c, o) in coefficients.iter().zip(&offsets) {
                let denom = x + o;
                value += c * c / (denom * denom);
                derivative -= 2.0 * c * c / (denom * denom * denom);
            }
            (value, derivative)
        };
        let target = rho(sampler.uniform(0.5, 4.0)).0;
        let (lo, hi) = (1e-3, 50.0);
        if !(rho(lo).0 > target && target > rho(hi).0) {
            continue;
        }
        let newton = crate::projection::newton_root(rho, target, (lo, hi), 1e-14, 60)
            .unwrap()
            .root;
        let bisect = bisection_root(|x| rho(x).0, target, lo, hi, 128);
        worst_gap = worst_gap.max((newton - bisect).abs());
    }
    outcomes.push(CheckOutcome::new(
        "root-find agrees with bisection",
        worst_gap <= 1e-10,
        format!("worst root gap {worst_gap:.3e}"),
    ));

    // Reduction surrogate inequality on random instances.
    let mut worst_violation = f64::NEG_INFINITY;
    for i in 0..300u32 {
        let dimension = 2 + sampler.range(3);
        let domain: Box<dyn DomainOracle> = if i % 2 == 0 {
            Box::new(CenteredBall {
                dimension,
                radius: 0.4,
            })
        } else {
            Box::new(ProbabilitySimplex { dimension })
        };
        let enclosing = if i % 2 == 0 { 0.4 } else { 1.0 };
        let outer = DVector::from_vec(sampler.ball(dimension, enclosing));
        let played = domain.project(&outer);
        let gradient: Vec<f64> = (0..dimension).map(|_| sampler.uniform(-2.0, 2.0)).collect();
        // A comparator inside the domain.
        let comparator = domain.project(&DVector::from_vec(sampler.ball(dimension, 1.0)));
        let lhs = (&played - &comparator).dot(&DVector::from_column_slice(&gradient));
        let rhs = 2.0
            * (crate::projection::reduction_surrogate_loss(domain.as_ref(), &gradient, &outer)
                - crate::projection::reduction_surrogate_loss(
                    domain.as_ref(),
                    &gradient,
                    &comparator,
                ));
        worst_violation = worst_violation.max(lhs - rhs);
    }
    outcomes.push(CheckOutcome::new(
        "reduction surrogate inequality",
        worst_violation <= 1e-9,
        format!("300 instances; worst violation {worst_violation:.3e}"),
    ));

    outcomes
}

// ---------------------------------------------------------------------------
// Restart suite
// ---------------------------------------------------------------------------

/// Restart-wrapper invariants: trigger timing on scripted streams,
/// logarithmic restart counts under geometric growth, and scale-freeness
/// of predictions and restart schedules.
pub fn restart_suite() -> Vec<CheckOutcome> {
    let mut outcomes = Vec::new();
    let mut sampler = Sampler::new(0x7e57);

    // Constant scale: no restarts.
    let mut learner = ScaleFreeSquint::uniform(2).unwrap();
    for t in 0..300u32 {
        let l = if t % 2 == 0 { [0.0, 1.0] } else { [1.0, 0.0] };
        learner
            .round(&LossVector::new(l.to_vec()).unwrap())
            .unwrap();
    }
    outcomes.push(CheckOutcome::new(
        "constant scale never restarts",
        learner.restarts().is_empty(),
        format!("{} restarts over 300 rounds", learner.restarts().len()),
    ));

    // One huge jump restarts exactly at its round.
    let mut learner = ScaleFreeSquint::uniform(2).unwrap();
    learner
        .round(&LossVector::new(vec![0.0, 2.0]).unwrap())
        .unwrap();
    let record = learner
        .round(&LossVector::new(vec![0.0, 2e6]).unwrap())
        .unwrap();
    outcomes.push(CheckOutcome::new(
        "million-fold jump restarts immediately",
        record.restarted && learner.restarts().len() == 1 && learner.restarts()[0].round == 2,
        format!("restart rounds {:?}", learner.restarts()),
    ));

    // Geometric growth: restart count below 2 + log2(total growth).
    let mut learner = ScaleFreeSquint::uniform(2).unwrap();
    for t in 0..40i32 {
        let scale = (2.0f64).powi(t);
        learner
            .round(&LossVector::new(vec![0.0, scale]).unwrap())
            .unwrap();
    }
    let first_scale = learner.global_scale().initial_scale().unwrap();
    let cap = 2.0 + (learner.global_scale().current_max() / first_scale).log2();
    outcomes.push(CheckOutcome::new(
        "geometric growth restarts logarithmically",
        (learner.restarts().len() as f64) <= cap,
        format!("{} restarts, cap {cap:.1}", learner.restarts().len()),
    ));

    // Scale-freeness of the expert wrapper.
    let mut worst = 0.0f64;
    let mut schedules_match = true;
    for &factor in &[1e-3, 1e3] {
        let stream = random_expert_stream(&mut sampler, 3, 150, true);
        let mut base = ScaleFreeSquint::uniform(3).unwrap();
        let mut scaled = ScaleFreeSquint::uniform(3).unwrap();
        for row in &stream {
            let a = base.round(&LossVector::new(row.clone()).unwrap()).unwrap();
            let b = scaled
                .round(&LossVector::new(row.iter().map(|&l| l * factor).collect()).unwrap())
                .unwrap();
            schedules_match &= a.restarted == b.restarted;
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "expert wrapper scale-freeness",
        schedules_match && worst <= 1e-9,
        format!("worst prediction shift {worst:.3e}, schedules match: {schedules_match}"),
    ));

    // Scale-freeness of the optimization wrapper.
    let mut worst = 0.0f64;
    let mut schedules_match = true;
    for &factor in &[1e-3, 1e3] {
        let stream = random_oco_stream(&mut sampler, 2, 150, true);
        let mut base = ScaleFreeMetaGrad::new(2, 2.0).unwrap();
        let mut scaled = ScaleFreeMetaGrad::new(2, 2.0).unwrap();
        for loss in &stream {
            let g_base = loss.gradient(&base.prediction());
            let g_scaled: Vec<f64> = loss
                .gradient(&scaled.prediction())
                .into_iter()
                .map(|g| g * factor)
                .collect();
            let a = base.round(&Gradient::new(g_base).unwrap()).unwrap();
            let b = scaled.round(&Gradient::new(g_scaled).unwrap()).unwrap();
            schedules_match &= a.restarted == b.restarted;
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    outcomes.push(CheckOutcome::new(
        "optimization wrapper scale-freeness",
        schedules_match && worst <= 1e-9,
        format!("worst prediction shift {worst:.3e}, schedules match: {schedules_match}"),
    ));

    outcomes
}
