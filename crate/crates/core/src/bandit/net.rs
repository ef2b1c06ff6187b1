//! Finite 1/√T-nets of a body.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_many, ConvexBody, HitAndRunParams};
use crate::linalg::{serde_vectors, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    #[serde(with = "serde_vectors")]
    pub points: Vec<Vector>,
    /// Grid spacing, or 0 for an explicit point list.
    pub spacing: f64,
    /// Guaranteed covering radius √n·spacing/2 (grid nets).
    pub covering_radius: f64,
    /// Largest distance to the net seen on random body points.
    pub observed_radius: f64,
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// Index of the nearest net point (lowest index on ties).
    pub fn nearest(&self, x: &Vector) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (p - x).norm_squared();
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// A net from explicit points; the covering radius is only observed.
    pub fn from_points<R: Rng + ?Sized>(body: &ConvexBody, points: Vec<Vector>, rng: &mut R) -> Result<Net> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty net".into()));
        }
        for p in &points {
            if p.len() != body.dimension {
                return Err(Error::DimensionMismatch {
                    expected: body.dimension,
                    found: p.len(),
                });
            }
            if !body.contains_tol(p, 1e-9) {
                return Err(Error::InvalidArgument(format!("net point {:?} lies outside the body", p.as_slice())));
            }
        }
        let mut net = Net {
            points,
            spacing: 0.0,
            covering_radius: f64::INFINITY,
            observed_radius: 0.0,
        };
        net.observed_radius = observed_radius(&net, body, rng)?;
        Ok(net)
    }
}

fn observed_radius<R: Rng + ?Sized>(net: &Net, body: &ConvexBody, rng: &mut R) -> Result<f64> {
    let xs = sample_many(body, 2000, rng, HitAndRunParams::default())?;
    Ok(xs
        .iter()
        .map(|x| (&net.points[net.nearest(x)] - x).norm())
        .fold(0.0, f64::max))
}

/// Axis grid of spacing 1/√T anchored at the lower corner of the bounding
/// box. Grid points within √n·h/2 of the body are projected onto it, which
/// keeps the covering radius at √n·h/2 up to the boundary.
pub fn build_net<R: Rng + ?Sized>(body: &ConvexBody, horizon: usize, rng: &mut R) -> Result<Net> {
    if horizon < 4 {
        return Err(Error::InvalidArgument(format!("horizon must be ≥ 4, got {horizon}")));
    }
    let n = body.dimension;
    let h = 1.0 / (horizon as f64).sqrt();
    let reach = (n as f64).sqrt() * h / 2.0;
    let mut lo = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for k in 0..n {
        let mut e = Vector::zeros(n);
        e[k] = 1.0;
        let hi = body.support(&e)?;
        e[k] = -1.0;
        lo[k] = -body.support(&e)?;
        counts[k] = ((hi - lo[k]) / h + 1e-9).floor() as usize + 2;
    }
    let total: usize = counts.iter().product();
    let mut points: Vec<Vector> = Vec::new();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let g = Vector::from_iterator(n, (0..n).map(|k| lo[k] + idx[k] as f64 * h));
        if body.contains_tol(&g, 1e-12) {
            points.push(g);
        } else {
            let p = body.project(&g)?;
            if (&p - &g).norm() <= reach && !points.iter().any(|q| (q - &p).norm() < 1e-9) {
                points.push(p);
            }
        }
        for k in 0..n {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty net".into()));
    }
    let bound = (4.0 * horizon as f64).powi(n as i32);
    if points.len() as f64 > bound {
        log::warn!("net has {} points, above (4T)^n = {bound}", points.len());
    }
    let mut net = Net {
        points,
        spacing: h,
        covering_radius: reach,
        observed_radius: 0.0,
    };
    net.observed_radius = observed_radius(&net, body, rng)?;
    if net.observed_radius > reach + 1e-9 {
        return Err(Error::Invariant(format!(
            "net covering radius {} exceeds {reach}",
            net.observed_radius
        )));
    }
    Ok(net)
}
