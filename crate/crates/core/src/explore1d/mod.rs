//! One-dimensional exploratory measure, the Lemma-2 gap check and the
//! generic measure machinery shared by every dimension.

mod measure;

pub use measure::{event_probability, Component, EventEstimate, ExplorationMeasure, WeightedComponent, FIBER_BUDGET};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convexfn::{argmin, MaxAffineFunction, ARGMIN_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{vector, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold: f64,
    pub samples: usize,
    pub pass: bool,
}

impl VerificationReport {
    fn from_estimate(e: EventEstimate, threshold: f64) -> Self {
        VerificationReport {
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            threshold,
            samples: e.samples,
            pass: e.ci_low > threshold,
        }
    }
}

/// How the required separation |f − g| scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "c", rename_all = "lowercase")]
pub enum GapRule {
    /// |f(x) − g(x)| > c·max(ε, f(x)).
    Relative(f64),
    /// |f(x) − g(x)| ≥ c·ε.
    Absolute(f64),
}

impl GapRule {
    pub fn separated(&self, fx: f64, gx: f64, eps: f64) -> bool {
        let d = (fx - gx).abs();
        match *self {
            GapRule::Relative(c) => d > c * eps.max(fx),
            GapRule::Absolute(c) => d >= c * eps,
        }
    }
}

/// N = ⌈log₂(1/ε)⌉ + 4.
pub fn dyadic_levels(eps: f64) -> usize {
    let l = (1.0 / eps).log2();
    let r = l.round();
    let c = if (l - r).abs() < 1e-12 { r } else { l.ceil() };
    c.max(0.0) as usize + 4
}

/// The 1-D construction with the quantities it was built from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Measure1d {
    pub measure: ExplorationMeasure,
    pub x0: f64,
    pub levels: usize,
    pub domain: (f64, f64),
}

pub fn build_measure_1d(domain: &ConvexBody, f: &MaxAffineFunction, eps: f64) -> Result<ExplorationMeasure> {
    Ok(build_measure_1d_detailed(domain, f, eps)?.measure)
}

/// Uniform mixture of the nested intervals I_k = [x₀ − d2^{−k}, x₀ + d2^{−k}] ∩ domain,
/// k = 0..N, and an atom at the minimizer x₀.
pub fn build_measure_1d_detailed(domain: &ConvexBody, f: &MaxAffineFunction, eps: f64) -> Result<Measure1d> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    check_dim(1, domain.dimension)?;
    check_dim(1, f.dimension)?;
    let (lo, hi) = domain.interval_bounds()?;
    if !(hi > lo) {
        return Err(Error::InvalidArgument("empty domain".into()));
    }
    let x0 = argmin(f, domain, ARGMIN_TOL)?[0].clamp(lo, hi);
    Ok(measure_from_minimizer(lo, hi, x0, eps))
}

/// The construction for a known minimizer.
pub fn measure_from_minimizer(lo: f64, hi: f64, x0: f64, eps: f64) -> Measure1d {
    let n = dyadic_levels(eps);
    let d = hi - lo;
    let w = 1.0 / (n + 2) as f64;
    let mut components = Vec::with_capacity(n + 2);
    for k in 0..=n {
        let h = d * 0.5f64.powi(k as i32);
        components.push(WeightedComponent {
            weight: w,
            component: Component::Segment {
                a: vector(&[(x0 - h).max(lo)]),
                b: vector(&[(x0 + h).min(hi)]),
            },
        });
    }
    components.push(WeightedComponent {
        weight: w,
        component: Component::Atom { point: vector(&[x0]) },
    });
    Measure1d {
        measure: ExplorationMeasure {
            dimension: 1,
            components,
        },
        x0,
        levels: n,
        domain: (lo, hi),
    }
}

/// Report for {x : |f(x) − g(x)| > gap_constant·max(ε, f(x))} against `prob_threshold`.
#[allow(clippy::too_many_arguments)]
pub fn verify_exploration<R: Rng + ?Sized>(
    mu: &ExplorationMeasure,
    f: &MaxAffineFunction,
    g: &MaxAffineFunction,
    eps: f64,
    gap_constant: f64,
    prob_threshold: f64,
    m: usize,
    rng: &mut R,
) -> Result<VerificationReport> {
    verify_exploration_with(mu, f, g, eps, GapRule::Relative(gap_constant), prob_threshold, m, rng)
}

#[allow(clippy::too_many_arguments)]
pub fn verify_exploration_with<R: Rng + ?Sized>(
    mu: &ExplorationMeasure,
    f: &MaxAffineFunction,
    g: &MaxAffineFunction,
    eps: f64,
    rule: GapRule,
    prob_threshold: f64,
    m: usize,
    rng: &mut R,
) -> Result<VerificationReport> {
    check_dim(mu.dimension, f.dimension)?;
    check_dim(mu.dimension, g.dimension)?;
    let est = event_probability(mu, |x| rule.separated(f.value(x), g.value(x), eps), m, rng)?;
    Ok(VerificationReport::from_estimate(est, prob_threshold))
}

/// 1/(8·ln(1 + 1/ε)).
pub fn threshold_1d(eps: f64) -> f64 {
    1.0 / (8.0 * (1.0 + 1.0 / eps).ln())
}

/// Lemma-2 style check: μ supported on [x₀, α] with density at most β,
/// event {|f − g| > max(ε, f)/(4β)}, threshold 1/2.
#[allow(clippy::too_many_arguments)]
pub fn lemma2_check<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    g: &MaxAffineFunction,
    x0: f64,
    alpha: f64,
    mu: &ExplorationMeasure,
    beta: f64,
    eps: f64,
    m: usize,
    rng: &mut R,
) -> Result<VerificationReport> {
    check_dim(1, f.dimension)?;
    check_dim(1, g.dimension)?;
    check_dim(1, mu.dimension)?;
    if !(beta >= 1.0) {
        return Err(Error::Precondition(format!("density bound beta must be ≥ 1, got {beta}")));
    }
    if !(alpha - 1.0 <= x0 && x0 < alpha) {
        return Err(Error::Precondition(format!("need alpha − 1 ≤ x0 < alpha, got x0={x0}, alpha={alpha}")));
    }
    if !(g.value(&vector(&[alpha])) < -eps) {
        return Err(Error::Precondition("g(alpha) must be below −eps".into()));
    }
    let grid = 1000;
    for k in 0..=grid {
        let x = vector(&[x0 + (alpha - x0) * k as f64 / grid as f64]);
        if f.value(&x) < -1e-12 {
            return Err(Error::Precondition("f must be ≥ 0 on [x0, alpha]".into()));
        }
        if k < grid && f.grad(&x)[0] < -1e-12 {
            return Err(Error::Precondition("f must be non-decreasing on [x0, alpha]".into()));
        }
    }
    let margin = 1e-9 * (1.0 + alpha.abs().max(x0.abs()));
    for _ in 0..1000 {
        let x = mu.sample(rng)?;
        if x[0] < x0 - margin || x[0] > alpha + margin {
            return Err(Error::Precondition("mu must be supported on [x0, alpha]".into()));
        }
    }
    let c = 0.25 / beta;
    let est = event_probability(
        mu,
        |x| GapRule::Relative(c).separated(f.value(x), g.value(x), eps),
        m,
        rng,
    )?;
    Ok(VerificationReport::from_estimate(est, 0.5))
}

/// Uniform measure on a segment of the line.
pub fn uniform_segment(a: f64, b: f64) -> ExplorationMeasure {
    ExplorationMeasure {
        dimension: 1,
        components: vec![WeightedComponent {
            weight: 1.0,
            component: Component::Segment {
                a: vector(&[a]),
                b: vector(&[b]),
            },
        }],
    }
}

/// Endpoints of a segment component (1-D).
pub fn segment_bounds(c: &Component) -> Option<(f64, f64)> {
    match c {
        Component::Segment { a, b } if a.len() == 1 => Some((a[0].min(b[0]), a[0].max(b[0]))),
        _ => None,
    }
}

/// Point helper for 1-D callers.
pub fn pt(x: f64) -> Vector {
    vector(&[x])
}
