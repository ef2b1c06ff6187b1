//! Seeded random sources and a few primitive draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`. Used for deterministic
/// fan-out: the result does not depend on how work is scheduled.
pub fn child(seed: u64, stream: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Fresh child drawn from a parent stream.
pub fn split(parent: &mut SimRng) -> SimRng {
    let s: u64 = parent.random();
    ChaCha8Rng::seed_from_u64(s)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}

/// Uniform point of the unit ball in R^n.
pub fn unit_ball<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    let dir = unit_sphere(rng, n);
    let u: f64 = rng.random();
    dir * u.powf(1.0 / n as f64)
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Index drawn with probability proportional to `weights`.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u: f64 = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding fallthrough: last index with positive weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_streams_differ_and_repeat() {
        let a: u64 = child(7, 0).random();
        let b: u64 = child(7, 1).random();
        let c: u64 = child(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ball_points_inside() {
        let mut rng = seeded(1);
        for n in 1..=3 {
            for _ in 0..1000 {
                assert!(unit_ball(&mut rng, n).norm() <= 1.0);
            }
        }
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let mut rng = seeded(3);
        for _ in 0..1000 {
            assert_ne!(categorical(&mut rng, &[0.5, 0.0, 0.5]), 1);
        }
    }
}
