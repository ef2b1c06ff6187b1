//! One Bayesian game: draw the true scenario, play T rounds, record r_t, v_t
//! and regret.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::posterior::PosteriorState;
use super::scenario::{Environment, Likelihood};
use super::strategy::{
    two_point_action, ActionDistribution, ActionKind, Step3Record, Surrogates, TwoPointParams,
};
use crate::convexfn::{argmin, weighted_sum_1d, MaxAffineFunction, ARGMIN_TOL};
use crate::error::{Error, Result};
use crate::explore1d::ExplorationMeasure;
use crate::explore_nd::{build_exploratory_measure, calibration_n2, BuildParams};
use crate::geometry::{sample_many, HitAndRunParams};
use crate::linalg::{serde_vector, Vector};
use crate::rng;
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    TwoPoint,
    Thompson,
    Uniform,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::TwoPoint => "two_point",
            Policy::Thompson => "thompson",
            Policy::Uniform => "uniform",
        })
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point" | "two-point" => Ok(Policy::TwoPoint),
            "thompson" => Ok(Policy::Thompson),
            "uniform" => Ok(Policy::Uniform),
            _ => Err(Error::InvalidArgument(format!(
                "unknown policy {s:?} (expected two_point, thompson or uniform)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    /// Separation constant of step 2; `None` picks 1/8 in one dimension and
    /// the recorded calibration otherwise.
    pub gap_constant: Option<f64>,
    pub step2_samples: usize,
    /// Extra body points searched for x*.
    pub body_samples: usize,
    /// Rebuild μ once the scenario posterior moved this far in total variation.
    pub rebuild_tv: f64,
    pub eps_cap: f64,
    pub build: BuildParams,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            gap_constant: None,
            step2_samples: 512,
            body_samples: 1024,
            rebuild_tv: 0.05,
            eps_cap: 0.5,
            build: BuildParams::default(),
        }
    }
}

impl GameParams {
    pub fn gap_for(&self, n: usize) -> Result<f64> {
        Ok(match self.gap_constant {
            Some(c) => c,
            None if n == 1 => 0.125,
            None => calibration_n2()?.c_gap,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round.
    pub t: usize,
    #[serde(with = "serde_vector")]
    pub x: Vector,
    /// ℓ_t(x_t) without noise.
    pub loss: f64,
    /// Feedback y_t.
    pub observed: f64,
    pub r_t: f64,
    pub v_t: f64,
    pub expected_r: f64,
    pub expected_v: f64,
    pub cum_regret: f64,
    pub cum_info: f64,
    pub action_kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step3: Option<Step3Record>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub seed: u64,
    pub policy: Policy,
    pub horizon: usize,
    pub net_size: usize,
    pub scenarios: usize,
    pub true_scenario: usize,
    pub sum_v: f64,
    /// ½ ln K for the net size K.
    pub half_ln_k: f64,
    pub half_ln_scenarios: f64,
    /// ½ H(α₁), the exact right-hand side of the information bound.
    pub half_entropy: f64,
    /// Σ ℓ_t(x_t) − Σ ℓ_t(x̄*).
    pub regret: f64,
    /// Σ ℓ_t(x_t) − min over the body (exact for one dimension or stationary
    /// losses, otherwise over net and sample points).
    pub regret_body: f64,
    pub sum_expected_r: f64,
    /// Smallest C with E r_t ≤ 1/√T + C·√(E v_t) on every round where E v_t > 0.
    pub goal_c: f64,
    /// Rounds with E v_t = 0 and E r_t > 1/√T (no finite C covers them).
    pub goal_uncovered: usize,
    pub step3_rounds: usize,
    pub fallback_rounds: usize,
    pub measure_builds: usize,
    pub max_identity_error: f64,
    pub info_bound_violations: usize,
    pub gap_constant: f64,
    /// Size of the net ∪ samples set searched for x* (the desk-scale
    /// stand-in for argmin over the body).
    pub xstar_search_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub summary: GameSummary,
    pub records: Vec<RoundRecord>,
}

struct MeasureCache {
    measure: Option<ExplorationMeasure>,
    alpha: Vec<f64>,
    eps: f64,
    round: usize,
    builds: usize,
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// min over the body of Σ_t ℓ_t^{(s)}.
fn best_in_body(env: &Environment, s: usize, candidates: &[Vector]) -> Result<f64> {
    let sc = &env.scenarios;
    let ls = &sc.scenarios[s].losses;
    let total = |x: &Vector| sc.total_loss(s, x);
    let exact = if ls.len() == 1 {
        let x = argmin(&ls[0], &env.body, ARGMIN_TOL)?;
        Some(total(&x))
    } else if env.body.dimension == 1 {
        let (lo, hi) = env.body.interval_bounds()?;
        let terms: Vec<(f64, &MaxAffineFunction)> = ls.iter().map(|l| (1.0, l)).collect();
        let sum = weighted_sum_1d(&terms, lo, hi)?;
        let x = argmin(&sum, &env.body, ARGMIN_TOL)?;
        Some(total(&x))
    } else {
        None
    };
    let sampled = candidates.iter().map(total).fold(f64::INFINITY, f64::min);
    Ok(exact.map_or(sampled, |e| e.min(sampled)))
}

/// Plays one game with the given seed.
pub fn run_game(env: &Environment, policy: Policy, seed: u64, params: &GameParams) -> Result<GameResult> {
    let horizon = env.horizon();
    let sc = &env.scenarios;
    let truth = rng::categorical(&mut rng::child(seed, 0), &sc.prior);
    let mut cand = env.net.points.clone();
    if params.body_samples > 0 {
        cand.extend(sample_many(
            &env.body,
            params.body_samples,
            &mut rng::child(seed, 1),
            HitAndRunParams::default(),
        )?);
    }
    let mut play = rng::child(seed, 2);
    let mut noise = rng::child(seed, 3);
    let mut build_rng = rng::child(seed, 4);
    let gap = params.gap_for(env.body.dimension)?;
    let tp = TwoPointParams {
        gap_constant: gap,
        samples: params.step2_samples,
        eps_cap: params.eps_cap,
    };
    let mut state = PosteriorState::prior(env);
    let half_entropy = 0.5 * entropy(&state.alpha);
    let best = &env.net.points[env.istar[truth]];
    let inv_sqrt_t = 1.0 / (horizon as f64).sqrt();
    let mut cache = MeasureCache {
        measure: None,
        alpha: Vec::new(),
        eps: f64::INFINITY,
        round: 0,
        builds: 0,
    };
    let stationary = sc.is_stationary();
    let mut records = Vec::with_capacity(horizon);
    let (mut cum_regret, mut cum_info, mut cum_loss, mut sum_er) = (0.0, 0.0, 0.0, 0.0);
    let (mut goal_c, mut goal_uncovered) = (0.0f64, 0usize);
    let (mut step3_rounds, mut fallback_rounds, mut max_id_err, mut info_viol) = (0, 0, 0.0f64, 0);
    for t in 0..horizon {
        let s = Surrogates::new(&state, env, t)?;
        let (dist, step3) = match policy {
            Policy::Uniform => (ActionDistribution::uniform(&env.net), None),
            Policy::Thompson => (ActionDistribution::thompson(&s.alpha, &env.net)?, None),
            Policy::TwoPoint => {
                let mut provider = |f: &MaxAffineFunction, eps: f64| -> Result<ExplorationMeasure> {
                    let stale = match &cache.measure {
                        None => true,
                        Some(_) => {
                            state.tv_to(&cache.alpha) > params.rebuild_tv
                                || eps < cache.eps
                                || (!stationary && cache.round != t)
                        }
                    };
                    if stale {
                        let mu = build_exploratory_measure(&env.body, f, eps, &params.build, &mut build_rng)?;
                        cache.measure = Some(mu);
                        cache.alpha = state.alpha_scenarios.clone();
                        cache.eps = eps;
                        cache.round = t;
                        cache.builds += 1;
                    }
                    Ok(cache.measure.clone().expect("built above"))
                };
                let d = two_point_action(&s, env, &cand, &mut provider, &tp, &mut play)?;
                if d.fallback.is_some() {
                    fallback_rounds += 1;
                }
                (d.distribution, d.step3)
            }
        };
        let (x, kind) = dist.sample(&mut play);
        let (r, v) = super::strategy::regret_info(&s, &x);
        let (er, ev) = dist.expected_regret_info(&s);
        if let Some(st) = &step3 {
            step3_rounds += 1;
            max_id_err = max_id_err.max(st.identity_error());
            if !st.info_bound_holds() {
                info_viol += 1;
            }
        }
        let excess = er - inv_sqrt_t;
        if ev > 0.0 {
            goal_c = goal_c.max(excess / ev.sqrt());
        } else if excess > 0.0 {
            goal_uncovered += 1;
        }
        let loss_fn = sc.loss(truth, t);
        let loss = loss_fn.value(&x);
        let observed = match env.likelihood {
            Likelihood::Deterministic { .. } => loss,
            Likelihood::Gaussian { sigma } => loss + sigma * rng::gaussian_vector(&mut noise, 1)[0],
        };
        cum_regret += loss - loss_fn.value(best);
        cum_info += v;
        cum_loss += loss;
        sum_er += er;
        state.absorb(env, t, &x, observed)?;
        records.push(RoundRecord {
            t: t + 1,
            x,
            loss,
            observed,
            r_t: r,
            v_t: v,
            expected_r: er,
            expected_v: ev,
            cum_regret,
            cum_info,
            action_kind: kind,
            step3,
        });
    }
    let regret_body = cum_loss - best_in_body(env, truth, &cand)?;
    let summary = GameSummary {
        seed,
        policy,
        horizon,
        net_size: env.net.len(),
        scenarios: sc.len(),
        true_scenario: truth,
        sum_v: cum_info,
        half_ln_k: 0.5 * (env.net.len() as f64).ln(),
        half_ln_scenarios: 0.5 * (sc.len() as f64).ln(),
        half_entropy,
        regret: cum_regret,
        regret_body,
        sum_expected_r: sum_er,
        goal_c,
        goal_uncovered,
        step3_rounds,
        fallback_rounds,
        measure_builds: cache.builds,
        max_identity_error: max_id_err,
        info_bound_violations: info_viol,
        gap_constant: gap,
        xstar_search_points: cand.len(),
    };
    Ok(GameResult { summary, records })
}

/// Games for every seed, in parallel, returned in seed order.
pub fn run_seeds(env: &Environment, policy: Policy, seeds: &[u64], params: &GameParams) -> Result<Vec<GameResult>> {
    seeds.par_iter().map(|&s| run_game(env, policy, s, params)).collect()
}

pub const CSV_HEADER: &str = "seed,t,x,loss,r_t,v_t,cum_regret,cum_info,action_kind";

/// One CSV row per round.
pub fn write_csv_rows(out: &mut String, seed: u64, records: &[RoundRecord]) {
    for r in records {
        let x: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(
            out,
            "{seed},{},{},{},{},{},{},{},{}",
            r.t,
            x.join(";"),
            r.loss,
            r.r_t,
            r.v_t,
            r.cum_regret,
            r.cum_info,
            r.action_kind.as_str()
        );
    }
}

pub fn results_csv(results: &[GameResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for g in results {
        write_csv_rows(&mut out, g.summary.seed, &g.records);
    }
    out
}

/// Seed averages of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub horizon: usize,
    pub policy: Policy,
    pub seeds: usize,
    pub mean_sum_v: f64,
    pub stderr_sum_v: f64,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_regret_body: f64,
    pub stderr_regret_body: f64,
    pub half_ln_k: f64,
    pub half_ln_scenarios: f64,
}

pub fn aggregate(results: &[GameResult]) -> Result<SeedAggregate> {
    let Some(first) = results.first() else {
        return Err(Error::InvalidArgument("no games to aggregate".into()));
    };
    let v: Vec<f64> = results.iter().map(|g| g.summary.sum_v).collect();
    let r: Vec<f64> = results.iter().map(|g| g.summary.regret).collect();
    let (mv, sv) = stats::mean_stderr(&v);
    let b: Vec<f64> = results.iter().map(|g| g.summary.regret_body).collect();
    let (mr, sr) = stats::mean_stderr(&r);
    let (mb, sb) = stats::mean_stderr(&b);
    Ok(SeedAggregate {
        horizon: first.summary.horizon,
        policy: first.summary.policy,
        seeds: results.len(),
        mean_sum_v: mv,
        stderr_sum_v: sv,
        mean_regret: mr,
        stderr_regret: sr,
        mean_regret_body: mb,
        stderr_regret_body: sb,
        half_ln_k: first.summary.half_ln_k,
        half_ln_scenarios: first.summary.half_ln_scenarios,
    })
}

/// Least-squares slope of ln(mean regret) against ln T.
pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.max(1e-300).ln()).collect();
    stats::ls_slope(&x, &y)
}
