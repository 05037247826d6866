//! Expert-learner oracles: quadrature cross-checks, the potential bound,
//! clipping, and behavioral invariances on randomized streams.

use lipadapt::core::{instantaneous_expert_regrets, ComparatorSpec, LossVector};
use lipadapt::harness::verify::{quadrature_log_integral, quadrature_weights};
use lipadapt::harness::Sampler;
use lipadapt::numeric::dot;
use lipadapt::squint::{exp_quadratic_integral, Squint};
use proptest::prelude::*;

fn loss(values: Vec<f64>) -> LossVector {
    LossVector::new(values).unwrap()
}

fn random_stream(sampler: &mut Sampler, experts: usize, horizon: usize) -> Vec<Vec<f64>> {
    // Scale jumps of x10 / x100 at random rounds.
    let jump_round = 1 + sampler.range(horizon);
    let factor = if sampler.sign() > 0.0 { 10.0 } else { 100.0 };
    let mut scale = 1.0;
    (0..horizon)
        .map(|t| {
            if t + 1 == jump_round {
                scale *= factor;
            }
            (0..experts)
                .map(|_| scale * sampler.uniform(-1.0, 1.0))
                .collect()
        })
        .collect()
}

#[test]
fn integral_tracks_quadrature_on_random_inputs() {
    let mut sampler = Sampler::new(31);
    for _ in 0..400 {
        let r = sampler.uniform(-600.0, 600.0);
        let v = sampler.uniform01() * 1e5;
        let a = sampler.uniform(1e-3, 0.5);
        let closed = lipadapt::squint::ln_exp_quadratic_integral(r, v, a).unwrap();
        let oracle = quadrature_log_integral(r, v, a);
        assert!(
            (closed - oracle).abs() <= 1e-9 * oracle.abs().max(1.0),
            "r={r}, v={v}, a={a}: closed {closed}, oracle {oracle}"
        );
    }
}

#[test]
fn weights_track_quadrature_along_trajectories() {
    // The module contract: closed-form weights within 1e-8 per
    // coordinate of quadrature-evaluated ones on K <= 8, T <= 200 runs.
    let mut sampler = Sampler::new(77);
    for trial in 0..12 {
        let experts = 2 + (trial % 7);
        let horizon = 40 + sampler.range(160);
        let stream = random_stream(&mut sampler, experts, horizon);
        let mut learner = Squint::uniform(experts, 1.0).unwrap();
        for row in &stream {
            learner.round(&loss(row.clone())).unwrap();
        }
        let closed = learner.weights().unwrap();
        let oracle = quadrature_weights(
            learner.prior(),
            &learner.clipped_regrets(),
            &learner.clipped_variances(),
            learner.integral_upper_limit(),
        );
        for (c, o) in closed.iter().zip(&oracle) {
            assert!(
                (c - o).abs() <= 1e-8,
                "trial {trial}: weight {c} vs quadrature {o}"
            );
        }
    }
}

#[test]
fn potential_bound_on_a_short_random_run() {
    let mut sampler = Sampler::new(5);
    let mut learner = Squint::uniform(3, 1.0).unwrap();
    for _ in 0..20 {
        let row: Vec<f64> = (0..3).map(|_| sampler.uniform(-2.0, 2.0)).collect();
        learner.round(&loss(row)).unwrap();
        let bound = (learner.scale().previous_max() / 1.0).ln();
        assert!(learner.potential() <= bound + 1e-9);
    }
}

#[test]
fn clipped_instantaneous_regrets_respect_the_previous_maximum() {
    // After observing a new maximum, the clipped regret magnitudes stay
    // within the previous maximum on random instances.
    let mut sampler = Sampler::new(99);
    for _ in 0..200 {
        let experts = 2 + sampler.range(6);
        let mut learner = Squint::uniform(experts, 1.0).unwrap();
        // Warm-up round, then a spike.
        let warm: Vec<f64> = (0..experts).map(|_| sampler.uniform(-1.0, 1.0)).collect();
        learner.round(&loss(warm)).unwrap();
        let previous_max = learner.scale().current_max();
        let spike: Vec<f64> = (0..experts).map(|_| sampler.uniform(-9.0, 9.0)).collect();
        let played = learner.prediction().to_vec();
        learner.round(&loss(spike.clone())).unwrap();
        let ratio = learner.scale().clip_ratio();
        let clipped: Vec<f64> = spike.iter().map(|&l| ratio * l).collect();
        for r in instantaneous_expert_regrets(&played, &clipped) {
            assert!(r.abs() <= previous_max * (1.0 + 1e-12));
        }
    }
}

#[test]
fn ledger_matches_brute_force_recomputation() {
    // Five random rounds; the incrementally maintained accounts must
    // match a direct re-summation from the stored trace.
    let mut sampler = Sampler::new(2024);
    let experts = 4;
    let mut learner = Squint::uniform(experts, 1.0).unwrap();
    for k in 0..experts {
        learner
            .register_comparator(ComparatorSpec::Expert(k))
            .unwrap();
    }
    let rho = vec![0.1, 0.2, 0.3, 0.4];
    learner
        .register_comparator(ComparatorSpec::Distribution(rho.clone()))
        .unwrap();

    let mut trace: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for _ in 0..5 {
        let row: Vec<f64> = (0..experts).map(|_| sampler.uniform(-3.0, 3.0)).collect();
        trace.push((learner.prediction().to_vec(), row.clone()));
        learner.round(&loss(row)).unwrap();
    }

    for k in 0..experts {
        let expected: f64 = trace.iter().map(|(p, l)| dot(p, l) - l[k]).sum();
        let got = learner
            .ledger()
            .regret_vs(&ComparatorSpec::Expert(k))
            .unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }
    let expected_rho: f64 = trace
        .iter()
        .map(|(p, l)| {
            let regrets = instantaneous_expert_regrets(p, l);
            dot(&rho, &regrets)
        })
        .sum();
    let got = learner
        .ledger()
        .regret_vs(&ComparatorSpec::Distribution(rho))
        .unwrap();
    assert!((got - expected_rho).abs() <= 1e-9 * expected_rho.abs().max(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The clipping identity holds per round on arbitrary streams.
    #[test]
    fn clipping_identity_is_pointwise(
        rows in prop::collection::vec(
            prop::collection::vec(-5.0f64..5.0, 3),
            1..40,
        ),
        spike_round in 0usize..40,
        spike in 1.0f64..200.0,
    ) {
        let mut learner = Squint::uniform(3, 1.0).unwrap();
        for k in 0..3 {
            learner.register_comparator(ComparatorSpec::Expert(k)).unwrap();
        }
        for (t, row) in rows.iter().enumerate() {
            let scaled: Vec<f64> = if t == spike_round {
                row.iter().map(|&l| l * spike).collect()
            } else {
                row.clone()
            };
            learner.round(&loss(scaled)).unwrap();
            let budget = learner.scale().current_max() - 1.0;
            for (_, account) in learner.ledger().accounts() {
                prop_assert!(account.regret() - account.clipped_regret() <= budget + 1e-9);
                prop_assert!(account.clipped_variance() <= account.variance() + 1e-12);
            }
        }
    }

    /// `sum_ratio` after T rounds lies in [0, T].
    #[test]
    fn sum_ratio_is_bounded_by_the_round_count(
        rows in prop::collection::vec(
            prop::collection::vec(-10.0f64..10.0, 2),
            1..50,
        ),
    ) {
        let mut learner = Squint::uniform(2, 0.5).unwrap();
        for row in &rows {
            learner.round(&loss(row.clone())).unwrap();
        }
        let s = learner.scale().sum_ratio();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= rows.len() as f64 + 1e-12);
    }

    /// Scaling all losses and the scale input jointly is invisible.
    #[test]
    fn joint_scaling_is_invisible(
        rows in prop::collection::vec(
            prop::collection::vec(-2.0f64..2.0, 3),
            1..30,
        ),
        factor in prop::sample::select(vec![1e-3f64, 0.1, 10.0, 1e3]),
    ) {
        let mut base = Squint::uniform(3, 1.0).unwrap();
        let mut scaled = Squint::uniform(3, factor).unwrap();
        for row in &rows {
            let a = base.round(&loss(row.clone())).unwrap();
            let b = scaled
                .round(&loss(row.iter().map(|&l| l * factor).collect()))
                .unwrap();
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    /// An all-equal round never changes later predictions.
    #[test]
    fn timeless_insertion(
        rows in prop::collection::vec(
            prop::collection::vec(0.0f64..4.0, 3),
            2..25,
        ),
        insert_at in 0usize..25,
        level in -5.0f64..5.0,
    ) {
        let insert_at = insert_at % rows.len();
        let mut plain = Squint::uniform(3, 2.0).unwrap();
        let mut padded = Squint::uniform(3, 2.0).unwrap();
        for (t, row) in rows.iter().enumerate() {
            if t == insert_at {
                padded.round(&loss(vec![level; 3])).unwrap();
            }
            let a = plain.round(&loss(row.clone())).unwrap();
            let b = padded.round(&loss(row.clone())).unwrap();
            for (x, y) in a.prediction.iter().zip(&b.prediction) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn integral_log_form_is_finite_far_beyond_f64_range() {
    // |R| ~ 1e4 with a moderate upper limit overflows the plain value but
    // not the log form.
    let ln_value = lipadapt::squint::ln_exp_quadratic_integral(1e4, 3.0, 0.5).unwrap();
    assert!(ln_value.is_finite());
    assert!(ln_value > 700.0);
    assert_eq!(
        exp_quadratic_integral(1e4, 3.0, 0.5).unwrap(),
        f64::INFINITY
    );
}
