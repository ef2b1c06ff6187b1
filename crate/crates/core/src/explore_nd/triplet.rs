//! Regions of stable gradient: a ball B(z, δ) on at least half of which the
//! gradient stays within ξt of tθ.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convexfn::{smoothed_gradient, MaxAffineFunction};
use crate::error::{check_dim, Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{serde_vector, spectral_norm, Vector};
use crate::rng;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JollyGoodTriplet {
    #[serde(with = "serde_vector")]
    pub z: Vector,
    #[serde(with = "serde_vector")]
    pub theta: Vector,
    pub t: f64,
    pub delta: f64,
    pub fraction: f64,
    pub xi: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripletParams {
    /// Samples for the smoothed gradient at each candidate.
    pub gradient_samples: usize,
    /// Samples for the concentration fraction.
    pub fraction_samples: usize,
}

impl Default for TripletParams {
    fn default() -> Self {
        TripletParams {
            gradient_samples: 400,
            fraction_samples: 2000,
        }
    }
}

/// Fraction of m uniform points x of B(z, δ) with |∇f(x) − tθ| ≤ ξt.
pub fn concentration_fraction<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    z: &Vector,
    delta: f64,
    target: &Vector,
    radius: f64,
    m: usize,
    rng: &mut R,
) -> u64 {
    let n = z.len();
    let mut hits = 0u64;
    for _ in 0..m {
        let x = z + rng::unit_ball(rng, n) * delta;
        if (f.grad(&x) - target).norm() <= radius {
            hits += 1;
        }
    }
    hits
}

/// Sufficient test for B(c, ρ) ⊂ body.
pub fn ball_inside(body: &ConvexBody, center: &Vector, radius: f64) -> bool {
    let hs_ok = body
        .halfspaces
        .iter()
        .all(|h| h.normal.dot(center) + radius <= h.offset + 1e-12);
    let e = &body.ellipsoid;
    let el = (&e.shape * (center - &e.center)).norm() + spectral_norm(&e.shape) * radius;
    hs_ok && el <= 1.0 + 1e-12
}

/// Candidate k = 0 is the center of `ball0`; later candidates are uniform in
/// B(center, radius − δ) so that B(z, δ) ⊂ ball0.
#[allow(clippy::too_many_arguments)]
pub fn find_jolly_good_triplet<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    body: &ConvexBody,
    ball0: (&Vector, f64),
    xi: f64,
    delta: f64,
    budget: usize,
    params: TripletParams,
    rng: &mut R,
) -> Result<JollyGoodTriplet> {
    let (center, radius) = ball0;
    check_dim(f.dimension, body.dimension)?;
    check_dim(f.dimension, center.len())?;
    if !(f.strong_convexity() > 0.0) {
        return Err(Error::Precondition(
            "triplet search needs a strongly convex function; regularize first".into(),
        ));
    }
    if !(delta > 0.0 && delta < radius) {
        return Err(Error::Precondition(format!(
            "need 0 < delta < radius, got delta = {delta}, radius = {radius}"
        )));
    }
    if !ball_inside(body, center, radius) {
        return Err(Error::Precondition("placement ball is not inside the body".into()));
    }
    let n = f.dimension;
    let m = params.fraction_samples;
    let mut best: f64 = 0.0;
    for k in 0..budget {
        let z = if k == 0 {
            center.clone()
        } else {
            center + rng::unit_ball(rng, n) * (radius - delta)
        };
        let g = smoothed_gradient(f, &z, delta, params.gradient_samples, rng)?;
        let t = g.vector.norm();
        if !(t > 0.0) {
            continue;
        }
        let theta = &g.vector / t;
        let hits = concentration_fraction(f, &z, delta, &g.vector, xi * t, m, rng);
        let fraction = hits as f64 / m as f64;
        best = best.max(fraction);
        let margin = 3.0 * stats::wilson_half_width(hits, m as u64);
        if fraction >= 0.5 + margin {
            return Ok(JollyGoodTriplet {
                z,
                theta,
                t,
                delta,
                fraction,
                xi,
                samples: m,
            });
        }
    }
    Err(Error::NoTriplet {
        attempts: budget,
        best_fraction: best,
    })
}

/// Fresh-sample fraction and its binomial σ at 1/2.
pub fn remeasure<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    triplet: &JollyGoodTriplet,
    m: usize,
    rng: &mut R,
) -> (f64, f64) {
    let target = &triplet.theta * triplet.t;
    let hits = concentration_fraction(
        f,
        &triplet.z,
        triplet.delta,
        &target,
        triplet.xi * triplet.t,
        m,
        rng,
    );
    (hits as f64 / m as f64, stats::binomial_sigma(0.5, m as u64))
}
