#![allow(dead_code)]

use msexplore::explore_nd::{remeasure, verify_gamma_cover, MultiScaleTrace};
use msexplore::rng::SimRng;

/// Structural findings for one multi-scale trace.
#[derive(Debug, Default)]
pub struct Structure {
    pub stages: usize,
    pub cap: usize,
    pub worst_ratio_ci_high: f64,
    pub largest_reduced: usize,
    pub covers_ok: bool,
    pub worst_triplet_margin: f64,
    pub triplets_checked: usize,
}

impl Structure {
    pub fn passes(&self, n: usize) -> bool {
        self.worst_ratio_ci_high <= 0.55
            && self.stages <= self.cap
            && self.largest_reduced <= n + 1
            && self.covers_ok
            && self.worst_triplet_margin >= 0.0
    }
}

/// Volume halving, stage count, reduced covers and fresh triplet fractions.
pub fn check_trace(trace: &MultiScaleTrace, n: usize, fresh: usize, rng: &mut SimRng) -> Structure {
    let mut s = Structure {
        stages: trace.n_stages,
        cap: msexplore::explore_nd::profile::iteration_cap(n, trace.eps),
        covers_ok: true,
        worst_triplet_margin: f64::INFINITY,
        ..Default::default()
    };
    for st in &trace.stages {
        s.worst_ratio_ci_high = s.worst_ratio_ci_high.max(st.volume_ratio.ci_high);
        let reduced = st.cover.reduced_directions();
        s.largest_reduced = s.largest_reduced.max(reduced.len());
        let ok = !reduced.is_empty()
            && verify_gamma_cover(&reduced, st.cover.gamma, 2000, rng)
                .map(|c| c.covered)
                .unwrap_or(false);
        s.covers_ok &= ok;
        for tr in &st.cover.triplets {
            let (frac, sigma) = remeasure(&st.function, tr, fresh, rng);
            s.worst_triplet_margin = s.worst_triplet_margin.min(frac - (0.5 - 3.0 * sigma));
            s.triplets_checked += 1;
        }
    }
    if s.triplets_checked == 0 {
        s.worst_triplet_margin = 0.0;
    }
    s
}

use msexplore::convexfn::{MaxAffineFunction, Piece};
use msexplore::explore1d::{Component, ExplorationMeasure, WeightedComponent};
use msexplore::linalg::vector;
use msexplore::rng as srng;
use rand::Rng;

/// Exact μ(A) for a 1-D measure of atoms and segments, with each segment
/// integrated on a midpoint grid of `grid` points.
pub fn grid_oracle(mu: &ExplorationMeasure, pred: impl Fn(f64) -> bool, grid: usize) -> f64 {
    mu.components
        .iter()
        .map(|wc| {
            let frac = match &wc.component {
                Component::Atom { point } => {
                    if pred(point[0]) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Component::Segment { a, b } => {
                    let hits = (0..grid)
                        .filter(|&k| pred(a[0] + (b[0] - a[0]) * (k as f64 + 0.5) / grid as f64))
                        .count();
                    hits as f64 / grid as f64
                }
                other => panic!("grid oracle handles atoms and segments only, got {other:?}"),
            };
            wc.weight * frac
        })
        .sum()
}

/// One instance of the one-dimensional gap lemma.
#[derive(Debug, Clone)]
pub struct Lemma2Instance {
    pub f: MaxAffineFunction,
    pub g: MaxAffineFunction,
    pub x0: f64,
    pub alpha: f64,
    pub mu: ExplorationMeasure,
    pub beta: f64,
    pub eps: f64,
}

/// Random f ≥ 0 non-decreasing right of x₀, convex g with g(α) < −ε, and μ
/// a mixture of uniform segments of [x₀, α] with β the sum of their
/// densities.
pub fn lemma2_instance(seed: u64) -> Lemma2Instance {
    let mut r = srng::child(seed, 0x1e2);
    let eps = 0.5f64.powi(r.random_range(2..=6));
    let alpha = srng::uniform(&mut r, 0.2, 1.0);
    let x0 = alpha - srng::uniform(&mut r, 0.05, 0.999);
    let c0 = srng::uniform(&mut r, 0.0, 0.2);
    let mut pieces = vec![
        Piece { a: c0 - 0.01 + x0, y: vector(&[-1.0]) },
        Piece { a: c0, y: vector(&[0.0]) },
    ];
    for _ in 0..r.random_range(0..4) {
        let s = srng::uniform(&mut r, 0.0, 1.0);
        let c = srng::uniform(&mut r, -0.5, 0.3);
        pieces.push(Piece { a: c - s * x0, y: vector(&[s]) });
    }
    let f = MaxAffineFunction::new(pieces, 0.0).unwrap();
    let below = -eps * (1.0 + srng::uniform(&mut r, 0.01, 1.0));
    let line = |r: &mut srng::SimRng| {
        let s = srng::uniform(r, -1.0, 1.0);
        Piece { a: below - s * alpha, y: vector(&[s]) }
    };
    let g = match r.random_range(0..4) {
        0 => MaxAffineFunction::new(vec![line(&mut r)], 0.0).unwrap(),
        1 | 2 => {
            let k = r.random_range(2..=3);
            MaxAffineFunction::new((0..k).map(|_| line(&mut r)).collect(), 0.0).unwrap()
        }
        // Lies below f everywhere.
        _ => f.shift(below - f.value(&vector(&[alpha]))),
    };
    let k = r.random_range(1..=3);
    let len = alpha - x0;
    let mut comps = Vec::new();
    let mut beta = 0.0;
    let raw: Vec<f64> = (0..k).map(|_| srng::uniform(&mut r, 0.2, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    for (i, w) in raw.iter().enumerate() {
        let (a, b) = if i == 0 {
            (x0, alpha)
        } else {
            let u = srng::uniform(&mut r, 0.0, 0.6);
            let v = srng::uniform(&mut r, u + 0.3, 1.0);
            (x0 + u * len, x0 + v * len)
        };
        let w = w / total;
        beta += w / (b - a);
        comps.push(WeightedComponent {
            weight: w,
            component: Component::Segment { a: vector(&[a]), b: vector(&[b]) },
        });
    }
    let wsum: f64 = comps.iter().map(|c| c.weight).sum();
    comps[0].weight += 1.0 - wsum;
    Lemma2Instance {
        f,
        g,
        x0,
        alpha,
        mu: ExplorationMeasure::new(1, comps).unwrap(),
        beta: f64::max(beta, 1.0),
        eps,
    }
}

impl Lemma2Instance {
    pub fn in_event(&self, x: f64) -> bool {
        let p = vector(&[x]);
        let fx = self.f.value(&p);
        (fx - self.g.value(&p)).abs() > 0.25 / self.beta * self.eps.max(fx)
    }
}
