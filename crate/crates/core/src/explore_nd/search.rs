//! Minimization of even functions of a direction.

use crate::error::Result;
use crate::linalg::{complement_basis, direction_net, vector, Vector};

/// Minimizes an even objective over the unit sphere: a net over half the
/// sphere, then local refinement (golden section on the angle for n=2,
/// shrinking pattern search for n=3).
pub fn minimize_even<F>(n: usize, mut objective: F) -> Result<(Vector, f64)>
where
    F: FnMut(&Vector) -> Result<f64>,
{
    match n {
        1 => {
            let v = vector(&[1.0]);
            let val = objective(&v)?;
            Ok((v, val))
        }
        2 => {
            let pi = std::f64::consts::PI;
            let k = 90;
            let at = |a: f64| vector(&[a.cos(), a.sin()]);
            let mut best = (0.0, f64::INFINITY);
            for i in 0..k {
                let a = pi * i as f64 / k as f64;
                let v = objective(&at(a))?;
                if v < best.1 {
                    best = (a, v);
                }
            }
            let h = pi / k as f64;
            let (mut lo, mut hi) = (best.0 - h, best.0 + h);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let mut c = hi - g * (hi - lo);
            let mut d = lo + g * (hi - lo);
            let mut fc = objective(&at(c))?;
            let mut fd = objective(&at(d))?;
            for _ in 0..30 {
                if fc < fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - g * (hi - lo);
                    fc = objective(&at(c))?;
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + g * (hi - lo);
                    fd = objective(&at(d))?;
                }
            }
            for (a, v) in [(c, fc), (d, fd)] {
                if v < best.1 {
                    best = (a, v);
                }
            }
            Ok((at(best.0), best.1))
        }
        _ => {
            let net: Vec<Vector> = direction_net(n, 400).into_iter().filter(|v| v[1] >= 0.0).collect();
            let mut bv = net[0].clone();
            let mut bf = f64::INFINITY;
            for v in net {
                let val = objective(&v)?;
                if val < bf {
                    bf = val;
                    bv = v;
                }
            }
            let mut step = 0.1;
            while step > 1e-4 {
                let basis = complement_basis(&bv);
                let mut moved = false;
                for j in 0..basis.ncols() {
                    for s in [-1.0, 1.0] {
                        let mut cand = &bv + basis.column(j) * (s * step);
                        cand /= cand.norm();
                        let val = objective(&cand)?;
                        if val < bf {
                            bf = val;
                            bv = cand;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            Ok((bv, bf))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_thin_direction_of_ellipse() {
        // Half-width of the ellipse x²/4 + y² ≤ 1 along v is sqrt(4v₀² + v₁²).
        let (v, val) = minimize_even(2, |v| Ok((4.0 * v[0] * v[0] + v[1] * v[1]).sqrt())).unwrap();
        assert!((val - 1.0).abs() < 1e-9);
        assert!(v[0].abs() < 1e-4);
    }

    #[test]
    fn three_dimensional_refinement() {
        let (_, val) = minimize_even(3, |v| Ok((9.0 * v[0] * v[0] + 4.0 * v[1] * v[1] + v[2] * v[2]).sqrt())).unwrap();
        assert!((val - 1.0).abs() < 1e-4);
    }
}
