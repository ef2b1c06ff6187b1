//! Random (K, f, g, α, ε) corpora: K of diameter ≤ 1, f ≥ 0 convex and
//! 1-Lipschitz with minimum 0, g convex 1-Lipschitz with g(α) < −ε.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convexfn::{argmin, MaxAffineFunction, Piece, ARGMIN_TOL};
use crate::error::{Error, Result};
use crate::geometry::{ConvexBody, Ellipsoid, Halfspace};
use crate::linalg::{direction_net, serde_vector, vector, Vector};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    MaxAffine,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlternativeKind {
    /// Tangent planes of f, each lowered just enough to pass below −ε at α,
    /// plus a polyhedral cone at α.
    Tangent,
    /// Tangent construction with α near the minimizer of f.
    Dip,
    /// Convex hull of the graph of f and the point (α, below): planes
    /// through (α, below) touching f along rays from α. Equal to f away
    /// from α, so only a neighbourhood of α separates the two.
    Hull,
    /// f shifted down.
    Shift,
    /// A few random planes through values below −ε at α.
    Planes,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub body: ConvexBody,
    pub f: MaxAffineFunction,
    pub g: MaxAffineFunction,
    #[serde(with = "serde_vector")]
    pub alpha: Vector,
    pub eps: f64,
    pub f_kind: FunctionKind,
    pub g_kind: AlternativeKind,
}

/// n=1: [0, 1]. n=2: a disk, a square or a random polygon inscribed in the
/// circle of radius 1/2. n=3: a ball or a cube of diameter 1.
pub fn random_body<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ConvexBody> {
    match n {
        1 => ConvexBody::interval(0.0, 1.0),
        2 => match rng.random_range(0..4) {
            0 => Ok(ConvexBody::ball(&Vector::zeros(2), 0.5)),
            1 => {
                let h = 0.5 / 2f64.sqrt();
                ConvexBody::axis_box(&[-h, -h], &[h, h])
            }
            _ => random_polygon(rng),
        },
        3 => {
            if rng.random_bool(0.5) {
                Ok(ConvexBody::ball(&Vector::zeros(3), 0.5))
            } else {
                let h = 0.5 / 3f64.sqrt();
                ConvexBody::axis_box(&[-h, -h, -h], &[h, h, h])
            }
        }
        _ => Err(Error::InvalidArgument(format!("no generator for dimension {n}"))),
    }
}

fn random_polygon<R: Rng + ?Sized>(rng: &mut R) -> Result<ConvexBody> {
    loop {
        let k = rng.random_range(4..=8);
        let mut angles: Vec<f64> = (0..k).map(|_| rng::uniform(rng, 0.0, std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let pts: Vec<Vector> = angles.iter().map(|a| vector(&[0.5 * a.cos(), 0.5 * a.sin()])).collect();
        let mut hs = Vec::with_capacity(k);
        for i in 0..k {
            let (p, q) = (&pts[i], &pts[(i + 1) % k]);
            let d = q - p;
            if d.norm() < 1e-6 {
                continue;
            }
            let normal = vector(&[d[1], -d[0]]);
            let offset = normal.dot(p);
            hs.push(Halfspace { normal, offset });
        }
        let body = ConvexBody::new(hs, Ellipsoid::ball(Vector::zeros(2), 0.5 * (1.0 + 1e-9)))?;
        if let Ok((_, r)) = body.chebyshev_center() {
            if r >= 0.12 {
                return Ok(body);
            }
        }
    }
}

/// Rejection sampling from the bounding ball.
pub fn random_point<R: Rng + ?Sized>(body: &ConvexBody, rng: &mut R) -> Vector {
    let (c, r) = body.bounding_ball();
    loop {
        let x = &c + rng::unit_ball(rng, body.dimension) * r;
        if body.contains_tol(&x, 0.0) {
            return x;
        }
    }
}

/// f ≥ 0 with minimum 0 over the body.
pub fn random_f<R: Rng + ?Sized>(body: &ConvexBody, kind: FunctionKind, rng: &mut R) -> Result<MaxAffineFunction> {
    let n = body.dimension;
    match kind {
        FunctionKind::MaxAffine => {
            let k = rng.random_range(1..=5);
            let pieces = (0..k)
                .map(|_| Piece {
                    a: rng::uniform(rng, -0.3, 0.3),
                    y: rng::unit_ball(rng, n),
                })
                .collect();
            let f = MaxAffineFunction::new(pieces, 0.0)?;
            let x0 = argmin(&f, body, ARGMIN_TOL)?;
            let m = f.value(&x0);
            Ok(f.shift(-m))
        }
        FunctionKind::Quadratic => {
            // q|x − c|² with 2q·diam ≤ 1.
            let q = rng::uniform(rng, 0.1, 0.5);
            let c = random_point(body, rng);
            MaxAffineFunction::new(
                vec![Piece {
                    a: q * c.norm_squared(),
                    y: &c * (-2.0 * q),
                }],
                q,
            )
        }
    }
}

fn cone_pieces(n: usize, alpha: &Vector, slope: f64, base: f64) -> Vec<Piece> {
    let dirs = if n == 1 { direction_net(1, 2) } else { direction_net(n, 16 * (n - 1)) };
    dirs.into_iter()
        .map(|d| Piece {
            a: base - slope * d.dot(alpha),
            y: d * slope,
        })
        .collect()
}

pub fn random_g<R: Rng + ?Sized>(
    body: &ConvexBody,
    f: &MaxAffineFunction,
    alpha: &Vector,
    eps: f64,
    kind: AlternativeKind,
    rng: &mut R,
) -> Result<MaxAffineFunction> {
    let n = body.dimension;
    let below = -eps * (1.0 + rng::uniform(rng, 0.01, 1.0));
    match kind {
        AlternativeKind::Shift => Ok(f.shift(below - f.value(alpha))),
        AlternativeKind::Tangent | AlternativeKind::Dip => {
            let mut pieces = cone_pieces(n, alpha, rng::uniform(rng, 0.2, 1.0), below);
            for _ in 0..24 {
                let p = random_point(body, rng);
                let grad = f.grad(&p);
                let a = f.value(&p) - grad.dot(&p);
                let lift = (a + grad.dot(alpha) - below).max(0.0);
                pieces.push(Piece { a: a - lift, y: grad });
            }
            MaxAffineFunction::new(pieces, 0.0)
        }
        AlternativeKind::Hull => {
            let rays = match n {
                1 => 2,
                2 => 48,
                _ => 160,
            };
            let mut pieces: Vec<Piece> = direction_net(n, rays)
                .iter()
                .filter_map(|u| hull_plane(f, alpha, u, below))
                .collect();
            if pieces.is_empty() {
                pieces = cone_pieces(n, alpha, 0.2, below);
            }
            MaxAffineFunction::new(pieces, 0.0)
        }
        AlternativeKind::Planes => {
            let k = rng.random_range(1..=4);
            let pieces = (0..k)
                .map(|_| {
                    let y = rng::unit_ball(rng, n);
                    let b = below - rng::uniform(rng, 0.0, 0.5);
                    Piece { a: b - y.dot(alpha), y }
                })
                .collect();
            MaxAffineFunction::new(pieces, 0.0)
        }
    }
}

/// Supporting plane of f at the point p = α + t·u where the tangent value at
/// α crosses `below`; `None` if there is no crossing or the slope exceeds 1.
fn hull_plane(f: &MaxAffineFunction, alpha: &Vector, u: &Vector, below: f64) -> Option<Piece> {
    // ψ(t) = f(p) − t⟨∇f(p), u⟩ is non-increasing in t.
    let psi = |t: f64| {
        let p = alpha + u * t;
        f.value(&p) - t * f.grad(&p).dot(u)
    };
    let mut hi = 0.125;
    while psi(hi) > below {
        hi *= 2.0;
        if hi > 64.0 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) > below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let p = alpha + u * t;
    let gl = f.grad(&(alpha + u * lo));
    let gr = f.grad(&(alpha + u * hi));
    let (a, b) = (gl.dot(u), gr.dot(u));
    // Mix the one-sided gradients so the plane passes through (α, below).
    let lam = if (a - b).abs() > 1e-15 {
        (((f.value(&p) - below) / t - b) / (a - b)).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let y = gl * lam + gr * (1.0 - lam);
    if y.norm() > 1.0 {
        return None;
    }
    let a0 = f.value(&p) - y.dot(&p);
    let excess = (a0 + y.dot(alpha) - below).max(0.0);
    Some(Piece { a: a0 - excess, y })
}

fn pick_g_kind<R: Rng + ?Sized>(rng: &mut R) -> AlternativeKind {
    match rng.random_range(0..20) {
        0..=5 => AlternativeKind::Tangent,
        6..=9 => AlternativeKind::Dip,
        10..=15 => AlternativeKind::Hull,
        16..=17 => AlternativeKind::Shift,
        _ => AlternativeKind::Planes,
    }
}

pub fn random_instance<R: Rng + ?Sized>(n: usize, eps: f64, rng: &mut R) -> Result<Instance> {
    let body = random_body(n, rng)?;
    let f_kind = if rng.random_bool(0.5) {
        FunctionKind::MaxAffine
    } else {
        FunctionKind::Quadratic
    };
    let f = random_f(&body, f_kind, rng)?;
    let g_kind = pick_g_kind(rng);
    let alpha = if g_kind == AlternativeKind::Dip {
        let x0 = argmin(&f, &body, ARGMIN_TOL)?;
        let r = rng::uniform(rng, 0.0, 0.2);
        let x = &x0 + rng::unit_ball(rng, n) * r;
        if body.contains_tol(&x, 0.0) {
            x
        } else {
            body.project(&x)?
        }
    } else {
        random_point(&body, rng)
    };
    let g = random_g(&body, &f, &alpha, eps, g_kind, rng)?;
    Ok(Instance {
        body,
        f,
        g,
        alpha,
        eps,
        f_kind,
        g_kind,
    })
}

/// `count` instances with ε cycling through `eps_values`; instance i uses
/// the child stream i of `seed`.
pub fn corpus(n: usize, count: usize, eps_values: &[f64], seed: u64) -> Result<Vec<Instance>> {
    (0..count)
        .map(|i| {
            let mut r = rng::child(seed, i as u64);
            random_instance(n, eps_values[i % eps_values.len()], &mut r)
        })
        .collect()
}
