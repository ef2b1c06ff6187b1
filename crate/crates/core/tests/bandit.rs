use msexplore::bandit::*;
use msexplore::convexfn::MaxAffineFunction;
use msexplore::explore1d::{uniform_segment, ExplorationMeasure};
use msexplore::geometry::ConvexBody;
use msexplore::linalg::{vector, Vector};
use msexplore::rng;
use msexplore::Error;
use proptest::prelude::*;

fn lin(a: f64, y: f64) -> MaxAffineFunction {
    MaxAffineFunction::from_pairs(&[(a, &[y])], 0.0).unwrap()
}

fn x1(v: f64) -> Vector {
    vector(&[v])
}

/// Body [0,1] with the given stationary losses and net.
fn env_1d(losses: Vec<MaxAffineFunction>, weights: &[f64], net: &[f64], horizon: usize) -> Environment {
    let body = ConvexBody::interval(0.0, 1.0).unwrap();
    let sc = losses
        .into_iter()
        .zip(weights)
        .map(|(l, &w)| Scenario {
            weight: w,
            losses: vec![l],
        })
        .collect();
    let set = ScenarioSet::new(horizon, sc).unwrap();
    let net = Net::from_points(&body, net.iter().map(|&v| x1(v)).collect(), &mut rng::seeded(0)).unwrap();
    Environment::new(body, net, set, Likelihood::default()).unwrap()
}

#[test]
fn toy_regret_and_information_match_enumeration() {
    let env = toy_environment(8).unwrap();
    let st = PosteriorState::prior(&env);
    let s = surrogates(&st, &env, 0).unwrap();
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        let (r, v) = regret_info(&s, &x1(x));
        assert!((r - 0.5).abs() <= 1e-12);
        assert!((v - (0.5 - x) * (0.5 - x)).abs() <= 1e-12);
    }
    assert!((regret_info(&s, &x1(0.0)).1 - 0.25).abs() <= 1e-12);
    assert!(regret_info(&s, &x1(0.5)).1.abs() <= 1e-12);
}

#[test]
fn toy_surrogates_enumerate() {
    let env = toy_environment(8).unwrap();
    let st = PosteriorState::prior(&env);
    let s = surrogates(&st, &env, 0).unwrap();
    for &x in &[0.0, 0.3, 1.0] {
        assert!((s.f(&x1(x)) - 0.5).abs() < 1e-15);
        assert!((s.f_i(0, &x1(x)).unwrap() - x).abs() < 1e-15);
        assert!((s.f_i(1, &x1(x)).unwrap() - (1.0 - x)).abs() < 1e-15);
    }
    let after = posterior_update(&st, &env, 0, &x1(0.2), 0.2).unwrap();
    let s = surrogates(&after, &env, 1).unwrap();
    assert!(matches!(s.f_i(1, &x1(0.0)), Err(Error::UndefinedIndex(1))));
    // Single scenario: f = f_{i*}.
    assert!((s.f(&x1(0.7)) - s.f_i(0, &x1(0.7)).unwrap()).abs() < 1e-15);
}

#[test]
fn point_mass_has_no_information_and_zero_regret_at_its_point() {
    let env = toy_environment(8).unwrap();
    let st = posterior_update(&PosteriorState::prior(&env), &env, 0, &x1(0.2), 0.8).unwrap();
    assert_eq!(st.alpha, vec![0.0, 1.0]);
    let s = surrogates(&st, &env, 1).unwrap();
    for k in 0..=10 {
        assert_eq!(regret_info(&s, &x1(k as f64 / 10.0)).1, 0.0);
    }
    assert_eq!(regret_info(&s, &x1(1.0)).0, 0.0);
}

#[test]
fn posterior_examples() {
    let env = toy_environment(8).unwrap();
    let prior = PosteriorState::prior(&env);
    // Distinct losses collapse the posterior.
    let a = posterior_update(&prior, &env, 0, &x1(0.25), 0.25).unwrap();
    assert_eq!(a.alpha_scenarios, vec![1.0, 0.0]);
    // Identical losses at x leave it unchanged.
    let b = posterior_update(&prior, &env, 0, &x1(0.5), 0.5).unwrap();
    assert_eq!(b.alpha_scenarios, prior.alpha_scenarios);
    assert!(matches!(
        posterior_update(&prior, &env, 0, &x1(0.25), 0.9),
        Err(Error::InconsistentObservation { t: 0 })
    ));

    // Gaussian σ = 0.1, residuals 0 and 0.2.
    let mut g = env_1d(vec![lin(0.3, 0.0), lin(0.5, 0.0)], &[1.0, 1.0], &[0.0, 1.0], 8);
    g.likelihood = Likelihood::Gaussian { sigma: 0.1 };
    let p = posterior_update(&PosteriorState::prior(&g), &g, 0, &x1(0.4), 0.3).unwrap();
    let e2 = (-2.0f64).exp();
    assert!((p.alpha_scenarios[0] - 1.0 / (1.0 + e2)).abs() < 1e-12);
    assert!((p.alpha_scenarios[1] - e2 / (1.0 + e2)).abs() < 1e-12);
}

/// Over fresh draws of the truth and the noise, E α_{t+1} = α_t.
#[test]
fn posterior_is_a_martingale() {
    let mut env = toy_environment(8).unwrap();
    env.likelihood = Likelihood::Gaussian { sigma: 0.5 };
    let mut r = rng::seeded(9);
    let start = posterior_update(&PosteriorState::prior(&env), &env, 0, &x1(0.1), 0.3).unwrap();
    let a0 = start.alpha_scenarios[0];
    let x = x1(0.2);
    let draws = 20_000;
    let mut vals = Vec::with_capacity(draws);
    for _ in 0..draws {
        let s = rng::categorical(&mut r, &start.alpha_scenarios);
        let y = env.scenarios.loss(s, 1).value(&x) + 0.5 * rng::gaussian_vector(&mut r, 1)[0];
        vals.push(posterior_update(&start, &env, 1, &x, y).unwrap().alpha_scenarios[0]);
    }
    let (m, se) = msexplore::stats::mean_stderr(&vals);
    assert!((m - a0).abs() <= 3.0 * se, "mean {m} vs {a0} (stderr {se})");
}

#[test]
fn step2_examples() {
    let env = toy_environment(8).unwrap();
    let st = PosteriorState::prior(&env);
    let s = surrogates(&st, &env, 0).unwrap();
    let mut r = rng::seeded(1);
    let at_zero = ExplorationMeasure::atom(x1(0.0));
    let out = step2_select_point(&s, 0.0, &[0, 1], 0.25, &at_zero, 0.1, 16, &mut r).unwrap();
    assert_eq!(out.score, 1.0);
    assert_eq!(out.indices, vec![0, 1]);
    assert_eq!(out.xbar, x1(0.0));
    // M = 1 returns the single draw.
    let one = step2_select_point(&s, 0.0, &[0, 1], 0.25, &uniform_segment(0.0, 0.4), 0.1, 1, &mut r).unwrap();
    assert_eq!(one.samples, 1);
    assert!(one.xbar[0] <= 0.4);
    // f_i = f on I: every score is zero.
    let same = env_1d(vec![lin(0.5, 0.0), lin(0.5, 0.0)], &[1.0, 1.0], &[0.0, 1.0], 8);
    let ss = surrogates(&PosteriorState::prior(&same), &same, 0).unwrap();
    assert!(matches!(
        step2_select_point(&ss, 0.0, &[0], 0.25, &uniform_segment(0.0, 1.0), 0.1, 64, &mut r),
        Err(Error::ExplorationFailure(_))
    ));
}

fn builder() -> impl FnMut(&MaxAffineFunction, f64) -> msexplore::Result<ExplorationMeasure> {
    let body = ConvexBody::interval(0.0, 1.0).unwrap();
    move |f, eps| msexplore::explore1d::build_measure_1d(&body, f, eps)
}

#[test]
fn toy_first_round_explores_with_probability_one() {
    let env = toy_environment(8).unwrap();
    let st = PosteriorState::prior(&env);
    let s = surrogates(&st, &env, 0).unwrap();
    let params = TwoPointParams {
        gap_constant: 0.125,
        samples: 512,
        eps_cap: 0.5,
    };
    let cand: Vec<Vector> = (0..=100).map(|k| x1(k as f64 / 100.0)).collect();
    let d = two_point_action(&s, &env, &cand, &mut builder(), &params, &mut rng::seeded(2)).unwrap();
    assert_eq!(d.distribution.atoms.len(), 1);
    assert_eq!(d.distribution.atoms[0].2, ActionKind::TwoPointExplore);
    let st3 = d.step3.unwrap();
    assert_eq!(st3.alpha_j, 1.0);
    assert!(st3.identity_error() <= 1e-12);
    assert!(st3.info_bound_holds());
}

#[test]
fn no_improvement_exploits() {
    let env = env_1d(vec![lin(0.2, 0.5)], &[1.0], &[0.0, 0.5, 1.0], 16);
    let st = PosteriorState::prior(&env);
    let s = surrogates(&st, &env, 0).unwrap();
    let params = TwoPointParams {
        gap_constant: 0.125,
        samples: 64,
        eps_cap: 0.5,
    };
    let d = two_point_action(&s, &env, &env.net.points, &mut builder(), &params, &mut rng::seeded(3)).unwrap();
    assert_eq!(d.distribution.atoms.len(), 1);
    assert_eq!(d.distribution.atoms[0].1, x1(0.0));
    assert_eq!(d.distribution.atoms[0].2, ActionKind::TwoPointExploit);
    assert!(d.step3.is_none());
}

#[test]
fn two_point_play_frequency() {
    let d = ActionDistribution {
        atoms: vec![
            (0.3, x1(0.9), ActionKind::TwoPointExplore),
            (0.7, x1(0.1), ActionKind::TwoPointExploit),
        ],
    };
    let mut r = rng::seeded(4);
    let n = 10_000;
    let hits = (0..n).filter(|_| d.sample(&mut r).1 == ActionKind::TwoPointExplore).count();
    let sigma = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((hits as f64 / n as f64 - 0.3).abs() <= 3.0 * sigma);
}

#[test]
fn thompson_frequencies() {
    let body = ConvexBody::interval(0.0, 1.0).unwrap();
    let net = build_net(&body, 16, &mut rng::seeded(5)).unwrap();
    let mut r = rng::seeded(6);
    let alpha = vec![0.2; 5];
    let n = 10_000;
    let mut counts = [0usize; 5];
    for _ in 0..n {
        let x = thompson_action(&alpha, &net, &mut r).unwrap();
        counts[net.nearest(&x)] += 1;
    }
    let sigma = (0.2f64 * 0.8 / n as f64).sqrt();
    for c in counts {
        assert!((c as f64 / n as f64 - 0.2).abs() <= 3.0 * sigma, "{counts:?}");
    }
    let point = [0.0, 0.0, 1.0, 0.0, 0.0];
    for _ in 0..20 {
        assert_eq!(thompson_action(&point, &net, &mut r).unwrap(), x1(0.5));
    }
    assert!(thompson_action(&[0.0; 5], &net, &mut r).is_err());
}

#[test]
fn single_scenario_has_no_information() {
    let body = ConvexBody::interval(0.0, 1.0).unwrap();
    let set = ScenarioSet::new(
        32,
        vec![Scenario {
            weight: 1.0,
            losses: vec![vee(&x1(0.3), 0.2, 0.5).unwrap()],
        }],
    )
    .unwrap();
    let env = Environment::with_grid_net(body, set, Likelihood::default(), &mut rng::seeded(7)).unwrap();
    for policy in [Policy::TwoPoint, Policy::Thompson, Policy::Uniform] {
        let g = run_game(&env, policy, 3, &GameParams::default()).unwrap();
        assert_eq!(g.summary.sum_v, 0.0);
        for rec in &g.records {
            assert_eq!(rec.v_t, 0.0);
            match policy {
                // Net plays cannot beat the best net point.
                Policy::Thompson | Policy::Uniform => assert!(rec.r_t >= -1e-15),
                // x* ranges over extra body points, within one net cell.
                Policy::TwoPoint => assert!(rec.r_t >= -0.5 * env.net.covering_radius - 1e-12),
            }
        }
    }
}

/// With deterministic feedback the toy posterior collapses on the first
/// informative round, after which the right endpoint is played forever.
#[test]
fn toy_game_collapses_and_plateaus() {
    let env = toy_environment(8).unwrap();
    for seed in 0..10 {
        let g = run_game(&env, Policy::TwoPoint, seed, &GameParams::default()).unwrap();
        let first = &g.records[0];
        assert_eq!(first.action_kind, ActionKind::TwoPointExplore);
        assert!((first.x[0] - 0.5).abs() > 1e-9);
        let plateau = first.cum_regret;
        for rec in &g.records[1..] {
            assert_eq!(rec.v_t, 0.0);
            assert!((rec.cum_regret - plateau).abs() < 1e-12);
        }
        // Oracle: the first loss is x or 1 − x, the rest are zero.
        let x = first.x[0];
        let expect = if g.summary.true_scenario == 0 { x } else { 1.0 - x };
        assert!((g.summary.regret - expect).abs() < 1e-12);
    }
}

fn vee_family(k: usize, likelihood: Likelihood, width: Option<f64>) -> VeeFamily {
    VeeFamily {
        dimension: 1,
        scenarios: k,
        width,
        likelihood,
    }
}

#[test]
fn step3_identities_hold_every_round() {
    let fam = vee_family(8, Likelihood::Gaussian { sigma: 0.3 }, Some(4.0));
    let mut rounds = 0;
    for seed in 0..6 {
        let env = fam.environment(128, 500 + seed).unwrap();
        let g = run_game(&env, Policy::TwoPoint, seed, &GameParams::default()).unwrap();
        for rec in &g.records {
            if let Some(st) = &rec.step3 {
                rounds += 1;
                assert!(st.identity_error() <= 1e-12, "{st:?}");
                assert!(st.expected_v.sqrt() >= st.info_bound, "{st:?}");
                assert!((rec.expected_r - st.expected_r).abs() == 0.0);
            }
        }
        assert_eq!(g.summary.info_bound_violations, 0);
    }
    assert!(rounds > 0);
}

#[test]
fn information_bound_over_seeds() {
    for k in [4usize, 16] {
        let fam = vee_family(k, Likelihood::default(), None);
        let env = fam.environment(64, 77).unwrap();
        for policy in [Policy::TwoPoint, Policy::Thompson] {
            let seeds: Vec<u64> = (0..20).collect();
            let res = run_seeds(&env, policy, &seeds, &GameParams::default()).unwrap();
            let a = aggregate(&res).unwrap();
            let bound = 0.5 * (k as f64).ln();
            assert!(a.mean_sum_v <= bound + 3.0 * a.stderr_sum_v, "K={k} {policy}: {a:?}");
        }
    }
}

#[test]
fn realized_regret_dominates_approximation() {
    let fam = vee_family(8, Likelihood::Gaussian { sigma: 0.3 }, Some(4.0));
    for seed in 0..5 {
        let env = fam.environment(64, seed).unwrap();
        for policy in [Policy::TwoPoint, Policy::Thompson, Policy::Uniform] {
            let g = run_game(&env, policy, seed, &GameParams::default()).unwrap();
            let root_t = (env.horizon() as f64).sqrt();
            assert!(g.summary.regret >= g.summary.regret_body - root_t);
        }
    }
}

#[test]
fn games_are_reproducible_and_seed_ordered() {
    let fam = vee_family(4, Likelihood::Gaussian { sigma: 0.2 }, Some(2.0));
    let env = fam.environment(32, 1).unwrap();
    let seeds = [5u64, 1, 3];
    let par = run_seeds(&env, Policy::TwoPoint, &seeds, &GameParams::default()).unwrap();
    for (g, &s) in par.iter().zip(&seeds) {
        let again = run_game(&env, Policy::TwoPoint, s, &GameParams::default()).unwrap();
        assert_eq!(g, &again);
    }
    let csv = results_csv(&par);
    assert!(csv.starts_with(CSV_HEADER));
    assert_eq!(csv.lines().count(), 1 + 3 * 32);
}

#[test]
fn loglog_slope_of_power_law() {
    let pts: Vec<(usize, f64)> = [64usize, 128, 256, 512].iter().map(|&t| (t, 3.0 * (t as f64).sqrt())).collect();
    assert!((loglog_slope(&pts) - 0.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn information_is_nonnegative(w in proptest::collection::vec(0.01f64..1.0, 2..6), c in proptest::collection::vec(0.0f64..1.0, 6), x in 0.0f64..1.0) {
        let k = w.len();
        let losses: Vec<_> = (0..k).map(|i| vee(&x1(c[i]), 0.2, 0.5).unwrap()).collect();
        let env = env_1d(losses, &w, &[0.0, 0.25, 0.5, 0.75, 1.0], 16);
        let st = PosteriorState::prior(&env);
        let s = surrogates(&st, &env, 0).unwrap();
        let (_, v) = regret_info(&s, &x1(x));
        prop_assert!(v >= 0.0);
        let total: f64 = st.alpha.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(push_alpha(&st.alpha_scenarios, &env.istar, env.net.len()), st.alpha.clone());
    }

    #[test]
    fn gaussian_update_stays_on_the_simplex(y in -0.5f64..1.5, x in 0.0f64..1.0, sigma in 0.05f64..1.0) {
        let mut env = env_1d(vec![lin(0.1, 0.5), lin(0.9, -0.5), lin(0.5, 0.0)], &[1.0, 2.0, 1.0], &[0.0, 0.5, 1.0], 8);
        env.likelihood = Likelihood::Gaussian { sigma };
        let p = posterior_update(&PosteriorState::prior(&env), &env, 0, &x1(x), y).unwrap();
        let a: f64 = p.alpha_scenarios.iter().sum();
        let b: f64 = p.alpha.iter().sum();
        prop_assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        prop_assert_eq!(p.t, 1);
    }
}
