mod common;

use proptest::prelude::*;

use msexplore::convexfn::MaxAffineFunction;
use msexplore::explore1d::{
    build_measure_1d_detailed, lemma2_check, segment_bounds, threshold_1d, uniform_segment, verify_exploration,
    GapRule,
};
use msexplore::explore_nd::{build_exploratory_measure_traced, BuildParams};
use msexplore::geometry::ConvexBody;
use msexplore::instances::corpus;
use msexplore::linalg::vector;
use msexplore::rng::{child, seeded};
use msexplore::stats::binomial_sigma;

fn vee(c: f64) -> MaxAffineFunction {
    MaxAffineFunction::from_pairs(&[(-c, &[1.0]), (c, &[-1.0])], 0.0).unwrap()
}

#[test]
fn lemma2_flat_f_and_linear_g() {
    let eps = 0.1;
    let f = MaxAffineFunction::constant(1, 0.0);
    let g = MaxAffineFunction::from_pairs(&[(-1.0 - 2.0 * eps, &[1.0])], 0.0).unwrap();
    let mu = uniform_segment(0.0, 1.0);
    let rep = lemma2_check(&f, &g, 0.0, 1.0, &mu, 1.0, eps, 100_000, &mut seeded(0)).unwrap();
    // |x − 1 − 2ε| > ε/4 on [0, 1] except near x = 1 + 2ε, which is outside.
    let oracle = common::grid_oracle(&mu, |x| (x - 1.0 - 2.0 * eps).abs() > 0.25 * eps, 10_000);
    assert!(rep.pass);
    assert!((rep.p_hat - oracle).abs() < 0.01, "{} vs {oracle}", rep.p_hat);
}

#[test]
fn lemma2_g_below_f_everywhere() {
    let eps = 0.0625;
    let f = MaxAffineFunction::from_pairs(&[(0.0, &[0.0]), (-0.2, &[0.5])], 0.0).unwrap();
    let g = f.shift(-0.4);
    let mu = uniform_segment(0.1, 0.9);
    let beta = 1.25;
    let rep = lemma2_check(&f, &g, 0.1, 0.9, &mu, beta, eps, 100_000, &mut seeded(1)).unwrap();
    let oracle = common::grid_oracle(
        &mu,
        |x| {
            let p = vector(&[x]);
            (f.value(&p) - g.value(&p)).abs() > 0.25 / beta * eps.max(f.value(&p))
        },
        10_000,
    );
    assert!(rep.pass);
    assert!((rep.p_hat - oracle).abs() < 0.01);
}

#[test]
fn lemma2_random_corpus_matches_grid() {
    for seed in 0..12 {
        let inst = common::lemma2_instance(seed);
        let rep = lemma2_check(
            &inst.f,
            &inst.g,
            inst.x0,
            inst.alpha,
            &inst.mu,
            inst.beta,
            inst.eps,
            20_000,
            &mut child(seed, 1),
        )
        .unwrap();
        let oracle = common::grid_oracle(&inst.mu, |x| inst.in_event(x), 10_000);
        assert!(oracle >= 0.5, "seed {seed}: oracle {oracle}");
        assert!((rep.p_hat - oracle).abs() < 0.02, "seed {seed}: {} vs {oracle}", rep.p_hat);
    }
}

#[test]
fn vee_with_constant_alternative() {
    let eps = 1.0 / 16.0;
    let dom = ConvexBody::interval(0.0, 1.0).unwrap();
    let f = vee(0.5);
    let g = MaxAffineFunction::constant(1, -2.0 * eps);
    let m = build_measure_1d_detailed(&dom, &f, eps).unwrap();
    let thr = threshold_1d(eps);
    assert!((thr - 0.0441).abs() < 1e-4);
    let rep = verify_exploration(&m.measure, &f, &g, eps, 0.125, thr, 100_000, &mut seeded(2)).unwrap();
    let rule = GapRule::Relative(0.125);
    let oracle = common::grid_oracle(
        &m.measure,
        |x| {
            let p = vector(&[x]);
            rule.separated(f.value(&p), g.value(&p), eps)
        },
        10_000,
    );
    assert!(rep.pass);
    assert!((rep.p_hat - oracle).abs() < 0.01);
}

#[test]
fn component_frequencies_follow_weights() {
    let dom = ConvexBody::interval(0.0, 1.0).unwrap();
    let m = build_measure_1d_detailed(&dom, &vee(0.3), 0.01).unwrap().measure;
    let draws = 100_000u64;
    let mut counts = vec![0u64; m.components.len()];
    let mut r = seeded(3);
    for _ in 0..draws {
        counts[m.sample_with_component(&mut r).unwrap().0] += 1;
    }
    for (c, wc) in counts.iter().zip(&m.components) {
        let freq = *c as f64 / draws as f64;
        assert!((freq - wc.weight).abs() <= 3.0 * binomial_sigma(wc.weight, draws), "{freq} vs {}", wc.weight);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_intervals_nest_around_the_minimizer(
        lo in -2.0f64..0.0,
        len in 0.1f64..1.0,
        c in 0.0f64..1.0,
        k in 2i32..=10,
    ) {
        let hi = lo + len;
        let dom = ConvexBody::interval(lo, hi).unwrap();
        let m = build_measure_1d_detailed(&dom, &vee(lo + c * len), 0.5f64.powi(k)).unwrap();
        let w = 1.0 / (m.levels + 2) as f64;
        prop_assert!(m.measure.components.iter().all(|c| c.weight == w));
        let total: f64 = m.measure.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-15);
        let segs: Vec<(f64, f64)> = m
            .measure
            .components
            .iter()
            .filter_map(|c| segment_bounds(&c.component))
            .collect();
        prop_assert_eq!(segs.len(), m.levels + 1);
        for s in &segs {
            prop_assert!(s.0 <= m.x0 && m.x0 <= s.1);
            prop_assert!(s.0 >= lo - 1e-12 && s.1 <= hi + 1e-12);
        }
        for p in segs.windows(2) {
            prop_assert!(p[0].0 <= p[1].0 && p[1].1 <= p[0].1);
        }
    }
}

#[test]
fn two_dimensional_traces_are_structurally_sound() {
    let params = BuildParams::default();
    for (i, inst) in corpus(2, 3, &[0.25, 0.1], 17).unwrap().iter().enumerate() {
        let mut r = child(17, 100 + i as u64);
        let out = build_exploratory_measure_traced(&inst.body, &inst.f, inst.eps, &params, &mut r).unwrap();
        assert!(!out.traces.is_empty());
        let s = common::check_trace(&out.traces[0], 2, 20_000, &mut r);
        assert!(s.passes(2), "instance {i}: {s:?}");
        let total: f64 = out.measure.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for _ in 0..500 {
            let x = out.measure.sample(&mut r).unwrap();
            assert!(inst.body.contains_tol(&x, 1e-7));
        }
    }
}
