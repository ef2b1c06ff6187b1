//! Posterior surrogates f_t, f_{i,t}, the quantities r_t and v_t, and the
//! action rules: two-point, Thompson and uniform play.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::Net;
use super::posterior::PosteriorState;
use super::scenario::Environment;
use crate::convexfn::{tangent_fit, weighted_sum_1d, MaxAffineFunction};
use crate::error::{Error, Result};
use crate::explore1d::ExplorationMeasure;
use crate::linalg::{serde_vector, Vector};
use crate::rng;

/// f_t and f_{i,t} evaluated by enumeration over scenarios.
#[derive(Clone, Debug)]
pub struct Surrogates<'a> {
    env: &'a Environment,
    t: usize,
    pub weights: Vec<f64>,
    pub alpha: Vec<f64>,
    /// (scenario, weight conditional on i* = i) for each net index.
    groups: Vec<Vec<(usize, f64)>>,
    /// Σ_i α_i f_{i,t}(x̄_i).
    pub benchmark: f64,
}

impl<'a> Surrogates<'a> {
    pub fn new(state: &PosteriorState, env: &'a Environment, t: usize) -> Result<Self> {
        let k = env.net.len();
        let mut groups = vec![Vec::new(); k];
        for (s, &w) in state.alpha_scenarios.iter().enumerate() {
            if w > 0.0 {
                let i = env.istar[s];
                groups[i].push((s, w / state.alpha[i]));
            }
        }
        if groups.iter().all(|g| g.is_empty()) {
            return Err(Error::InvalidArgument("posterior has empty support".into()));
        }
        let mut out = Surrogates {
            env,
            t,
            weights: state.alpha_scenarios.clone(),
            alpha: state.alpha.clone(),
            groups,
            benchmark: 0.0,
        };
        out.benchmark = out
            .support()
            .into_iter()
            .map(|i| out.alpha[i] * out.fi_unchecked(i, &env.net.points[i]))
            .sum();
        Ok(out)
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn f(&self, x: &Vector) -> f64 {
        let sc = &self.env.scenarios;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, w)| w * sc.loss(s, self.t).value(x))
            .sum()
    }

    pub fn defined(&self, i: usize) -> bool {
        i < self.groups.len() && !self.groups[i].is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.groups.len()).filter(|&i| self.defined(i)).collect()
    }

    fn fi_unchecked(&self, i: usize, x: &Vector) -> f64 {
        let sc = &self.env.scenarios;
        self.groups[i].iter().map(|&(s, w)| w * sc.loss(s, self.t).value(x)).sum()
    }

    /// f_{i,t}(x); an error where α_i = 0.
    pub fn f_i(&self, i: usize, x: &Vector) -> Result<f64> {
        if !self.defined(i) {
            return Err(Error::UndefinedIndex(i));
        }
        Ok(self.fi_unchecked(i, x))
    }

    /// f_t as a max-affine function: exact in one dimension, otherwise the
    /// tangent-plane model through the net points (exact on the net).
    pub fn f_function(&self) -> Result<MaxAffineFunction> {
        let sc = &self.env.scenarios;
        let terms: Vec<(f64, &MaxAffineFunction)> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(s, &w)| (w, sc.loss(s, self.t)))
            .collect();
        if self.env.body.dimension == 1 {
            let (lo, hi) = self.env.body.interval_bounds()?;
            return weighted_sum_1d(&terms, lo, hi);
        }
        tangent_fit(&self.env.net.points, |x| {
            let mut v = 0.0;
            let mut g = Vector::zeros(x.len());
            for (w, l) in &terms {
                v += w * l.value(x);
                g += l.grad(x) * *w;
            }
            (v, g)
        })
    }
}

pub fn surrogates<'a>(state: &PosteriorState, env: &'a Environment, t: usize) -> Result<Surrogates<'a>> {
    Surrogates::new(state, env, t)
}

/// (r_t(x), v_t(x)) by summing over the support of α.
pub fn regret_info(s: &Surrogates, x: &Vector) -> (f64, f64) {
    let fx = s.f(x);
    let v = s
        .support()
        .into_iter()
        .map(|i| {
            let d = fx - s.fi_unchecked(i, x);
            s.alpha[i] * d * d
        })
        .sum();
    (fx - s.benchmark, v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step1 {
    pub level: f64,
    pub eps: f64,
    pub indices: Vec<usize>,
    pub mass: f64,
    /// The scan passed only after halving the mass requirement, or not at all.
    pub relaxed: bool,
}

/// Dyadic scan for ε ∈ [|L|/2, 1] with α({i : f_i(x̄_i) ≤ −ε}) ≥ |L|/(2 ln(2/|L|) ε).
/// `values[i]` = f_i(x̄_i) after translating f(x*) to 0; entries with α_i = 0
/// are ignored.
pub fn step1_epsilon(alpha: &[f64], values: &[f64], horizon: usize) -> Result<Step1> {
    let level: f64 = alpha
        .iter()
        .zip(values)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, v)| a * v)
        .sum();
    let floor = -1.0 / (horizon as f64).sqrt();
    if level > floor {
        return Err(Error::Precondition(format!(
            "L = {level:.3e} is above -1/sqrt(T) = {floor:.3e}; play the minimizer instead"
        )));
    }
    let abs_l = level.abs();
    let set_at = |eps: f64| -> (Vec<usize>, f64) {
        let idx: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0 && values[i] <= -eps).collect();
        let mass = idx.iter().map(|&i| alpha[i]).sum();
        (idx, mass)
    };
    let need = |eps: f64| abs_l / (2.0 * (2.0 / abs_l).ln() * eps);
    for (relax, factor) in [(false, 1.0), (true, 0.5)] {
        let mut eps = abs_l / 2.0;
        while eps <= 1.0 + 1e-15 {
            let (idx, mass) = set_at(eps);
            if !idx.is_empty() && mass >= factor * need(eps) {
                if relax {
                    log::warn!("step-1 scan passed only with the relaxed requirement at eps = {eps}");
                }
                return Ok(Step1 {
                    level,
                    eps,
                    indices: idx,
                    mass,
                    relaxed: relax,
                });
            }
            eps *= 2.0;
        }
    }
    log::warn!("step-1 scan found no grid point; using eps = |L|/2");
    let eps = abs_l / 2.0;
    let (idx, mass) = set_at(eps);
    Ok(Step1 {
        level,
        eps,
        indices: idx,
        mass,
        relaxed: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2 {
    #[serde(with = "serde_vector")]
    pub xbar: Vector,
    pub indices: Vec<usize>,
    /// α(J).
    pub score: f64,
    pub samples: usize,
}

/// Best of `m` draws from μ for Σ_{i∈I} α_i 1{|f − f_i| ≥ c·max(ε, f − f(x*))}.
#[allow(clippy::too_many_arguments)]
pub fn step2_select_point<R: Rng + ?Sized>(
    s: &Surrogates,
    f_shift: f64,
    indices: &[usize],
    eps: f64,
    mu: &ExplorationMeasure,
    gap_constant: f64,
    m: usize,
    rng: &mut R,
) -> Result<Step2> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("step 2 needs a nonempty index set".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("step 2 needs at least one sample".into()));
    }
    let mut best: Option<(f64, Vector, Vec<usize>)> = None;
    for _ in 0..m {
        let x = mu.sample(rng)?;
        let fx = s.f(&x);
        let gap = gap_constant * eps.max(fx - f_shift);
        let mut score = 0.0;
        let mut j = Vec::new();
        for &i in indices {
            if (fx - s.f_i(i, &x)?).abs() >= gap {
                score += s.alpha[i];
                j.push(i);
            }
        }
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, x, j));
        }
    }
    let (score, xbar, j) = best.expect("m ≥ 1");
    if !(score > 0.0) {
        return Err(Error::ExplorationFailure(format!(
            "no sample separates f from any f_i with i in I (|I| = {}, eps = {eps:.3e})",
            indices.len()
        )));
    }
    Ok(Step2 {
        xbar,
        indices: j,
        score,
        samples: m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    TwoPointExploit,
    TwoPointExplore,
    Thompson,
    Uniform,
}

impl ActionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActionKind::TwoPointExploit => "two_point_exploit",
            ActionKind::TwoPointExplore => "two_point_explore",
            ActionKind::Thompson => "thompson",
            ActionKind::Uniform => "uniform",
        }
    }
}

/// A finitely supported action distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDistribution {
    pub atoms: Vec<(f64, Vector, ActionKind)>,
}

impl ActionDistribution {
    pub fn point(x: Vector, kind: ActionKind) -> Self {
        ActionDistribution {
            atoms: vec![(1.0, x, kind)],
        }
    }

    /// x̄_i with probability α_i.
    pub fn thompson(alpha: &[f64], net: &Net) -> Result<Self> {
        let atoms: Vec<_> = alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &a)| (a, net.points[i].clone(), ActionKind::Thompson))
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("Thompson play needs a nonempty support".into()));
        }
        Ok(ActionDistribution { atoms })
    }

    pub fn uniform(net: &Net) -> Self {
        let p = 1.0 / net.len() as f64;
        ActionDistribution {
            atoms: net.points.iter().map(|x| (p, x.clone(), ActionKind::Uniform)).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vector, ActionKind) {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        let k = if self.atoms.len() == 1 { 0 } else { rng::categorical(rng, &w) };
        (self.atoms[k].1.clone(), self.atoms[k].2)
    }

    /// (E r(X), E v(X)).
    pub fn expected_regret_info(&self, s: &Surrogates) -> (f64, f64) {
        self.atoms.iter().fold((0.0, 0.0), |(er, ev), (p, x, _)| {
            let (r, v) = regret_info(s, x);
            (er + p * r, ev + p * v)
        })
    }
}

/// x̄_i with probability α_i.
pub fn thompson_action<R: Rng + ?Sized>(alpha: &[f64], net: &Net, rng: &mut R) -> Result<Vector> {
    if alpha.len() != net.len() || !alpha.iter().any(|&a| a > 0.0) {
        return Err(Error::InvalidArgument("Thompson play needs a nonempty support".into()));
    }
    Ok(net.points[rng::categorical(rng, alpha)].clone())
}

/// Step-3 quantities of one two-point round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Record {
    pub level: f64,
    pub eps: f64,
    pub measure_eps: f64,
    pub alpha_j: f64,
    /// f(x̄) − f(x*).
    pub f_xbar: f64,
    pub expected_r: f64,
    /// |L| + α(J)·f(x̄).
    pub identity_rhs: f64,
    pub expected_v: f64,
    /// gap_constant·α(J)·max(ε, f(x̄)).
    pub info_bound: f64,
    pub step1_relaxed: bool,
    #[serde(with = "serde_vector")]
    pub xstar: Vector,
    #[serde(with = "serde_vector")]
    pub xbar: Vector,
}

impl Step3Record {
    pub fn identity_error(&self) -> f64 {
        (self.expected_r - self.identity_rhs).abs()
    }

    pub fn info_bound_holds(&self) -> bool {
        self.expected_v.sqrt() >= self.info_bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointParams {
    pub gap_constant: f64,
    /// Draws from μ in step 2.
    pub samples: usize,
    /// The measure is built at scale min(ε, eps_cap).
    pub eps_cap: f64,
}

#[derive(Clone, Debug)]
pub struct TwoPointDecision {
    pub distribution: ActionDistribution,
    pub step3: Option<Step3Record>,
    /// Set when step 2 failed and the round fell back to Thompson play.
    pub fallback: Option<String>,
    pub xstar: Vector,
}

/// argmin of f over `candidates`, first index on ties.
pub fn candidate_argmin(s: &Surrogates, candidates: &[Vector]) -> (Vector, f64) {
    let mut best = 0;
    let mut bv = f64::INFINITY;
    for (k, x) in candidates.iter().enumerate() {
        let v = s.f(x);
        if v < bv {
            bv = v;
            best = k;
        }
    }
    (candidates[best].clone(), bv)
}

/// The two-point rule. `measure` returns an exploratory measure of the
/// given max-affine f_t at the given scale.
pub fn two_point_action<R: Rng + ?Sized>(
    s: &Surrogates,
    env: &Environment,
    candidates: &[Vector],
    measure: &mut dyn FnMut(&MaxAffineFunction, f64) -> Result<ExplorationMeasure>,
    params: &TwoPointParams,
    rng: &mut R,
) -> Result<TwoPointDecision> {
    let (xstar, fstar) = candidate_argmin(s, candidates);
    let support = s.support();
    let mut values = vec![0.0; env.net.len()];
    for &i in &support {
        values[i] = s.f_i(i, &env.net.points[i])? - fstar;
    }
    let level = s.benchmark - fstar;
    let horizon = env.horizon();
    if level >= -1.0 / (horizon as f64).sqrt() {
        return Ok(TwoPointDecision {
            distribution: ActionDistribution::point(xstar.clone(), ActionKind::TwoPointExploit),
            step3: None,
            fallback: None,
            xstar,
        });
    }
    let st1 = step1_epsilon(&s.alpha, &values, horizon)?;
    let f = s.f_function()?;
    let measure_eps = st1.eps.min(params.eps_cap);
    let mu = measure(&f, measure_eps)?;
    let st2 = match step2_select_point(s, fstar, &st1.indices, st1.eps, &mu, params.gap_constant, params.samples, rng) {
        Ok(v) => v,
        Err(Error::ExplorationFailure(msg)) => {
            log::debug!("round {}: {msg}; falling back to Thompson play", s.round());
            return Ok(TwoPointDecision {
                distribution: ActionDistribution::thompson(&s.alpha, &env.net)?,
                step3: None,
                fallback: Some(msg),
                xstar,
            });
        }
        Err(e) => return Err(e),
    };
    let aj = st2.score;
    let mut atoms = vec![(aj, st2.xbar.clone(), ActionKind::TwoPointExplore)];
    if aj < 1.0 {
        atoms.push((1.0 - aj, xstar.clone(), ActionKind::TwoPointExploit));
    }
    let distribution = ActionDistribution { atoms };
    let (er, ev) = distribution.expected_regret_info(s);
    let f_xbar = s.f(&st2.xbar) - fstar;
    let step3 = Step3Record {
        level,
        eps: st1.eps,
        measure_eps,
        alpha_j: aj,
        f_xbar,
        expected_r: er,
        identity_rhs: level.abs() + aj * f_xbar,
        expected_v: ev,
        info_bound: params.gap_constant * aj * st1.eps.max(f_xbar),
        step1_relaxed: st1.relaxed,
        xstar: xstar.clone(),
        xbar: st2.xbar,
    };
    Ok(TwoPointDecision {
        distribution,
        step3: Some(step3),
        fallback: None,
        xstar,
    })
}
