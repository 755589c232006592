//! Cross-module property tests.

mod common;

use proptest::prelude::*;

use categorize::analysis::{
    check_alternation, check_full_pooling, check_full_separation, Alternation,
};
use categorize::priors::{
    build_receiver, transform_state_dependent, QualitySupport, ReceiverFamily,
};
use categorize::solver::{
    flip_problem, lower_convex_envelope, solve, solve_exact, Categorization, PercentileCurve,
};
use categorize::tolerances::{TOL_ENV, TOL_VAL};
use categorize::valuation::{
    random_categorization, sender_value_all, weighting_psi, PosteriorFunction,
};

fn curve_strategy() -> impl Strategy<Value = PercentileCurve> {
    (4usize..120, proptest::collection::vec(-0.5f64..1.5, 120)).prop_map(|(m, raw)| {
        let z: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        let h: Vec<f64> = (0..=m).map(|k| raw[k % raw.len()]).collect();
        PercentileCurve::from_samples(z, h).unwrap()
    })
}

proptest! {
    #[test]
    fn envelope_is_convex_below_and_touches_vertices(curve in curve_strategy()) {
        let c = lower_convex_envelope(curve);
        let (z, h, env) = (c.z(), c.h(), c.env());
        prop_assert!((env[0] - h[0]).abs() < 1e-12);
        prop_assert!((env[z.len() - 1] - h[z.len() - 1]).abs() < 1e-12);
        for (&e, &hv) in env.iter().zip(h) {
            prop_assert!(e <= hv + TOL_ENV);
        }
        for k in 1..z.len() - 1 {
            let t = (z[k] - z[k - 1]) / (z[k + 1] - z[k - 1]);
            let chord = env[k - 1] + t * (env[k + 1] - env[k - 1]);
            prop_assert!(chord - env[k] >= -1e-9);
        }
        for &v in c.vertices() {
            prop_assert!((env[v] - h[v]).abs() < 1e-12);
        }
        // Idempotence: the envelope of the envelope is itself.
        let again = lower_convex_envelope(
            PercentileCurve::from_samples(z.to_vec(), env.to_vec()).unwrap(),
        );
        for (&a, &b) in again.env().iter().zip(env) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn quantile_round_trips(k in 0.3f64..3.0, z in 0.0f64..1.0) {
        let r = build_receiver(
            &ReceiverFamily::Power { k },
            QualitySupport::unit(),
            501,
        )
        .unwrap();
        prop_assert!((r.eval(r.quantile(z)) - z).abs() < 1e-9);
        let x = r.quantile(z);
        prop_assert!((r.quantile(r.eval(x)) - x).abs() < 1e-9);
    }

    #[test]
    fn identity_transform_is_lossless(seed in 0u64..500) {
        let (s, _) = common::random_instance(seed);
        let t = transform_state_dependent(&s, |_| 1.0).unwrap();
        for (a, b) in s.vs().iter().zip(t.vs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((s.value_at_lo() - t.value_at_lo()).abs() < 1e-12);
        prop_assert!((s.jump_at_lo() - t.jump_at_lo()).abs() < 1e-12);
    }
}

#[test]
fn categorization_is_value_free_under_identical_priors() {
    // With matching priors every categorization earns the prior mean.
    for family in [
        ReceiverFamily::Uniform,
        ReceiverFamily::Power { k: 2.0 },
        ReceiverFamily::Logistic { mu: 0.4, s: 0.15 },
    ] {
        let r = build_receiver(&family, QualitySupport::unit(), common::PRIOR_N).unwrap();
        let s = r.as_weighting();
        let mean = r.mean();
        for seed in 0..40 {
            let cat = random_categorization(&r, seed, 8);
            for v in sender_value_all(&cat, &s, &r).unwrap() {
                assert!(
                    (v - mean).abs() < TOL_VAL,
                    "family {family:?} seed {seed}: {v} vs {mean}"
                );
            }
        }
    }
}

#[test]
fn weighting_matches_sender_off_pools_and_is_receiver_affine_on_pools() {
    for seed in 0..20 {
        let (s, r) = common::random_instance(seed);
        let cat = random_categorization(&r, seed ^ 0x5eed, 5);
        let w = weighting_psi(&cat, &s, &r).unwrap();
        assert!((w.eval(0.0) - s.value_at_lo()).abs() < 1e-12);
        assert!((w.eval(1.0) - 1.0).abs() < 1e-12);
        for &x in r.xs().iter().step_by(7) {
            match cat.pool_containing(x) {
                None => {
                    if x > 0.0 {
                        assert!((w.eval(x) - s.eval(x)).abs() < 1e-12);
                    }
                }
                Some(i) => {
                    // Affine in receiver mass: interior points sit on the
                    // chord between the pool edges in (R, value) space.
                    let (p, q) = cat.pools()[i];
                    let t = (r.eval(x) - r.eval(p)) / (r.eval(q) - r.eval(p));
                    let chord = s.eval(p) + t * (s.eval(q.min(1.0)) - s.eval(p));
                    assert!((w.eval(x) - chord).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn posterior_function_is_monotone_step_plus_identity() {
    for seed in 0..20 {
        let (_, r) = common::random_instance(seed);
        let cat = random_categorization(&r, seed.wrapping_mul(31), 7);
        let pf = PosteriorFunction::new(&cat, &r);
        let mut prev = f64::NEG_INFINITY;
        for &x in r.xs() {
            let v = pf.eval(x);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        for (i, &(p, q)) in cat.pools().iter().enumerate() {
            let mean = pf.pool_means()[i];
            assert!(mean > p && mean < q, "pool mean strictly inside [{p}, {q})");
        }
    }
}

#[test]
fn full_separation_implies_full_pooling_after_flip() {
    let mut checked = 0;
    for seed in 0..60 {
        let (s, r) = common::random_instance(seed);
        if !check_full_separation(&s, &r).holds {
            continue;
        }
        checked += 1;
        let (fs, fr) = flip_problem(&s, &r).unwrap();
        assert!(
            check_full_pooling(&fs, &fr).holds,
            "seed {seed}: separation without pooled flip"
        );
    }
    assert!(
        checked >= 2,
        "too few fully separating instances: {checked}"
    );
}

#[test]
fn panel_a_has_one_interior_pool_between_two_separating_zones() {
    let (s, r) = common::panel_a_instance();
    let (_, cat) = solve(&s, &r, 2000).unwrap();
    assert_eq!(cat.pools().len(), 1);
    let (p, q) = cat.pools()[0];
    assert!(p > 0.03 && q < 0.97, "pool [{p}, {q}) should be interior");
    assert_eq!(check_alternation(&s, &r, &cat), Alternation::Holds);
}

#[test]
fn solver_beats_sampled_categorizations_on_random_instances() {
    for seed in 0..12 {
        let (s, r) = common::random_instance(seed);
        let (_, best) = solve_exact(&s, &r).unwrap();
        let best_value = sender_value_all(&best, &s, &r).unwrap()[0];
        for k in 0..40 {
            let cat = random_categorization(&r, seed * 1000 + k, 8);
            let v = sender_value_all(&cat, &s, &r).unwrap()[0];
            assert!(
                best_value >= v - 1e-9,
                "seed {seed}/{k}: {best_value} < {v}"
            );
        }
    }
}

#[test]
fn extraction_agrees_with_classification_flags() {
    for seed in 0..10 {
        let (s, r) = common::random_instance(seed);
        let (curve, cat) = solve(&s, &r, 1500).unwrap();
        for (k, &z) in curve.z().iter().enumerate().take(curve.z().len() - 1) {
            let x = r.quantile(z);
            let in_pool = cat.pool_containing(x).is_some();
            assert_eq!(curve.point_pooled(k), in_pool, "seed {seed} z={z} x={x}");
        }
    }
}

#[test]
fn full_pooling_cross_check_with_extraction() {
    for seed in 0..30 {
        let (s, r) = common::random_instance(seed);
        let (curve, cat) = solve(&s, &r, 2000).unwrap();
        let predicate = check_full_pooling(&s, &r).holds;
        let extracted = cat.is_full_pooling();
        if predicate != extracted {
            // Disagreement is only allowed when the curve carries an affine
            // stretch that makes the distinction value-free.
            assert!(
                !curve.affine_stretches().is_empty() || curve.globally_affine(),
                "seed {seed}: predicate {predicate} vs extraction {extracted}"
            );
        }
    }
}

#[test]
fn reweighting_transforms_drive_the_expected_regimes() {
    use categorize::priors::{transform_quadratic, transform_retail};
    let r = build_receiver(&ReceiverFamily::Uniform, QualitySupport::unit(), 1001).unwrap();

    // A steep increasing tilt makes the curve convex: full separation.
    let s = transform_quadratic(&r, |_| 1.0, 10.0).unwrap();
    assert!(check_full_separation(&s, &r).holds);
    let (_, cat) = solve(&s, &r, 1000).unwrap();
    assert!(cat.is_full_separation());

    // A positive decreasing weight makes it concave: full pooling.
    let s = transform_quadratic(&r, |_| 2.0, -1.0).unwrap();
    assert!(check_full_pooling(&s, &r).holds);
    let (_, cat) = solve(&s, &r, 1000).unwrap();
    assert!(cat.is_full_pooling());

    // Same regime through the retail entry point with a decreasing fee.
    let s = transform_retail(&r, |v| 2.0 - v).unwrap();
    let (_, cat) = solve(&s, &r, 1000).unwrap();
    assert!(cat.is_full_pooling());
}

#[test]
fn increasing_reweighting_dominates_in_likelihood_ratio() {
    use categorize::analysis::check_lr_on;
    // Tilting a common prior by an increasing weight produces a weighting
    // that dominates it in the likelihood-ratio order.
    for family in [ReceiverFamily::Uniform, ReceiverFamily::Power { k: 1.6 }] {
        let r = build_receiver(&family, QualitySupport::unit(), common::PRIOR_N).unwrap();
        let tilted = transform_state_dependent(&r.as_weighting(), |a| 0.5 + a).unwrap();
        let margin = check_lr_on(&tilted, &r, (0.0, 1.0)).unwrap();
        assert!(
            margin.holds,
            "family {family:?}: slack {}",
            margin.worst_slack
        );
    }
}

#[test]
fn learning_schedules_are_monotone_for_arbitrary_categorizations() {
    use categorize::schooling::{build_learning, CostFunction, SchoolingConfig};
    let unit = QualitySupport::unit();
    let f0 = build_receiver(&ReceiverFamily::Power { k: 0.8 }, unit, 1001).unwrap();
    let r = build_receiver(&ReceiverFamily::Uniform, unit, 1001).unwrap();
    let cfg = SchoolingConfig::new(
        f0,
        r,
        CostFunction::Affine {
            intercept: 2.2,
            slope: -0.8,
        },
        0.9,
        0.25,
    )
    .unwrap();
    for seed in 0..25 {
        let cat = random_categorization(cfg.r(), seed, 7);
        let ell = build_learning(&cat, &cfg).unwrap();
        assert!(ell.is_nondecreasing(), "seed {seed}");
        // Jumps occur exactly at posterior discontinuities: pool edges and
        // the separated top after a terminal pool.
        for (x, size) in ell.jumps() {
            assert!(size > 0.0);
            let boundary = cat
                .pools()
                .iter()
                .any(|&(p, q)| (x - p).abs() < 1e-12 || (x - q).abs() < 1e-12)
                || (x - 1.0).abs() < 1e-12;
            assert!(boundary, "seed {seed}: jump at non-boundary {x}");
        }
    }
}

#[test]
fn categorization_percentile_images_match_receiver() {
    for seed in 0..10 {
        let (_, r) = common::random_instance(seed);
        let cat = random_categorization(&r, seed + 99, 6);
        for (&(p, q), &(zp, zq)) in cat.pools().iter().zip(cat.percentile_pools()) {
            assert!((r.eval(p) - zp).abs() < 1e-12);
            assert!((r.eval(q) - zq).abs() < 1e-12);
        }
        let _ = Categorization::new(&r, cat.pools().to_vec()).unwrap();
    }
}
