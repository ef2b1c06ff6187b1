use serde::{Deserialize, Serialize};

use crate::conic;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    self, invert, serde_matrix, serde_vector, smallest_singular_value, spectral_norm, Matrix,
    Vector,
};

/// Global geometric tolerance for membership tests.
pub const GEOM_TOL: f64 = 1e-9;

/// ⟨normal, x⟩ ≤ offset with a unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(with = "serde_vector")]
    pub normal: Vector,
    pub offset: f64,
}

/// {x : |shape·(x − center)| ≤ 1}. A ball of radius r has shape I/r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    #[serde(with = "serde_vector")]
    pub center: Vector,
    #[serde(with = "serde_matrix")]
    pub shape: Matrix,
}

impl Ellipsoid {
    pub fn ball(center: Vector, radius: f64) -> Self {
        let n = center.len();
        Ellipsoid {
            center,
            shape: Matrix::identity(n, n) / radius,
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (&self.shape * (x - &self.center)).norm() <= 1.0 + tol
    }

    /// sup of ⟨d, x⟩ over the ellipsoid, in closed form.
    pub fn support(&self, d: &Vector) -> f64 {
        let inv_t = invert(&self.shape.transpose()).expect("ellipsoid shape is invertible");
        d.dot(&self.center) + (inv_t * d).norm()
    }

    /// Radius if the shape is a multiple of the identity.
    pub fn as_ball_radius(&self) -> Option<f64> {
        let n = self.shape.nrows();
        let s = self.shape[(0, 0)];
        let iso = (&self.shape - Matrix::identity(n, n) * s).norm() <= 1e-14 * s.abs();
        (iso && s > 0.0).then(|| 1.0 / s)
    }
}

/// x ↦ matrix·x + offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    #[serde(with = "serde_matrix")]
    pub matrix: Matrix,
    #[serde(with = "serde_vector")]
    pub offset: Vector,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap {
            matrix: Matrix::identity(n, n),
            offset: Vector::zeros(n),
        }
    }

    pub fn linear(matrix: Matrix) -> Self {
        let n = matrix.nrows();
        AffineMap {
            matrix,
            offset: Vector::zeros(n),
        }
    }

    pub fn translation(offset: Vector) -> Self {
        let n = offset.len();
        AffineMap {
            matrix: Matrix::identity(n, n),
            offset,
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.offset
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = invert(&self.matrix)?;
        let offset = -(&inv * &self.offset);
        Ok(AffineMap {
            matrix: inv,
            offset,
        })
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &inner.matrix,
            offset: &self.matrix * &inner.offset + &self.offset,
        }
    }

    pub fn condition_number(&self) -> f64 {
        spectral_norm(&self.matrix) / smallest_singular_value(&self.matrix)
    }
}

/// Bounded convex body: intersection of halfspaces with an ellipsoid.
///
/// Input files describe the ellipsoid as a bounding ball; general ellipsoids
/// appear after affine changes of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    pub dimension: usize,
    pub halfspaces: Vec<Halfspace>,
    pub ellipsoid: Ellipsoid,
}

impl ConvexBody {
    /// Build and validate a body; normals are rescaled to unit length.
    pub fn new(halfspaces: Vec<Halfspace>, ellipsoid: Ellipsoid) -> Result<Self> {
        let n = ellipsoid.center.len();
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
        }
        if ellipsoid.shape.nrows() != n || ellipsoid.shape.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ellipsoid.shape.nrows(),
            });
        }
        if smallest_singular_value(&ellipsoid.shape) <= 0.0
            || !ellipsoid.shape.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument("degenerate bounding region".into()));
        }
        let mut hs = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            check_dim(n, h.normal.len())?;
            let norm = h.normal.norm();
            if !(norm > 0.0) || !h.offset.is_finite() || !linalg::all_finite(&h.normal) {
                return Err(Error::InvalidArgument("halfspace needs a nonzero finite normal".into()));
            }
            hs.push(Halfspace {
                normal: h.normal / norm,
                offset: h.offset / norm,
            });
        }
        Ok(ConvexBody {
            dimension: n,
            halfspaces: hs,
            ellipsoid,
        })
    }

    /// Like [`ConvexBody::new`], additionally requiring a strictly interior point.
    pub fn new_checked(halfspaces: Vec<Halfspace>, ellipsoid: Ellipsoid) -> Result<Self> {
        let body = Self::new(halfspaces, ellipsoid)?;
        let (_, r) = body.chebyshev_center()?;
        if r <= 1e-12 {
            return Err(Error::Infeasible("body has empty interior".into()));
        }
        Ok(body)
    }

    pub fn ball(center: &Vector, radius: f64) -> Self {
        ConvexBody {
            dimension: center.len(),
            halfspaces: Vec::new(),
            ellipsoid: Ellipsoid::ball(center.clone(), radius),
        }
    }

    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let n = lo.len();
        check_dim(n, hi.len())?;
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument("box needs lo < hi".into()));
        }
        let mut hs = Vec::new();
        for i in 0..n {
            hs.push(Halfspace {
                normal: linalg::unit(n, i),
                offset: hi[i],
            });
            hs.push(Halfspace {
                normal: -linalg::unit(n, i),
                offset: -lo[i],
            });
        }
        let center = Vector::from_iterator(n, lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)));
        let radius = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| (0.5 * (b - a)).powi(2))
            .sum::<f64>()
            .sqrt();
        // Slightly inflated so the corners are strictly inside.
        Ok(ConvexBody {
            dimension: n,
            halfspaces: hs,
            ellipsoid: Ellipsoid::ball(center, radius * (1.0 + 1e-9)),
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::axis_box(&[lo], &[hi])
    }

    /// Polytope from halfspaces alone; a bounding ball is derived from the
    /// coordinate extents.
    pub fn polytope(n: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        let big = ConvexBody::new(halfspaces, Ellipsoid::ball(Vector::zeros(n), 1e6))?;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            hi[i] = big.support(&linalg::unit(n, i))?;
            lo[i] = -big.support(&-linalg::unit(n, i))?;
        }
        if hi.iter().chain(lo.iter()).any(|v| v.abs() > 1e5) {
            return Err(Error::Unbounded(vec![]));
        }
        let center = Vector::from_iterator(n, lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)));
        let radius = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (0.5 * (b - a)).powi(2))
            .sum::<f64>()
            .sqrt();
        ConvexBody::new_checked(
            big.halfspaces,
            Ellipsoid::ball(center, radius * (1.0 + 1e-6) + 1e-9),
        )
    }

    pub fn contains(&self, x: &Vector) -> Result<bool> {
        check_dim(self.dimension, x.len())?;
        Ok(self.contains_tol(x, GEOM_TOL))
    }

    pub fn contains_tol(&self, x: &Vector, tol: f64) -> bool {
        self.halfspaces
            .iter()
            .all(|h| h.normal.dot(x) <= h.offset + tol)
            && self.ellipsoid.contains(x, tol)
    }

    /// Parameter range {t : x + t·d ∈ body}, or None if the line misses it.
    pub fn chord(&self, x: &Vector, d: &Vector) -> Option<(f64, f64)> {
        let u = &self.ellipsoid.shape * (x - &self.ellipsoid.center);
        let w = &self.ellipsoid.shape * d;
        let a = w.norm_squared();
        let b = u.dot(&w);
        let c = u.norm_squared() - 1.0;
        let disc = b * b - a * c;
        if a <= 0.0 || disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // Stable roots of a t² + 2 b t + c.
        let (mut lo, mut hi) = if b >= 0.0 {
            let q = -(b + s);
            (q / a, if q != 0.0 { c / q } else { 0.0 })
        } else {
            let q = -b + s;
            (if q != 0.0 { c / q } else { 0.0 }, q / a)
        };
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        for h in &self.halfspaces {
            let nd = h.normal.dot(d);
            let slack = h.offset - h.normal.dot(x);
            if nd > 1e-300 {
                hi = hi.min(slack / nd);
            } else if nd < -1e-300 {
                lo = lo.max(slack / nd);
            } else if slack < 0.0 {
                return None;
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn bounding_ball(&self) -> (Vector, f64) {
        let r = 1.0 / smallest_singular_value(&self.ellipsoid.shape);
        (self.ellipsoid.center.clone(), r)
    }

    /// Image of the body under an invertible affine map.
    pub fn transform(&self, map: &AffineMap) -> Result<ConvexBody> {
        check_dim(self.dimension, map.matrix.nrows())?;
        let inv = invert(&map.matrix)?;
        let inv_t = inv.transpose();
        let halfspaces = self
            .halfspaces
            .iter()
            .map(|h| {
                let a = &inv_t * &h.normal;
                Halfspace {
                    offset: h.offset + a.dot(&map.offset),
                    normal: a,
                }
            })
            .collect();
        let ellipsoid = Ellipsoid {
            center: map.apply(&self.ellipsoid.center),
            shape: &self.ellipsoid.shape * inv,
        };
        ConvexBody::new(halfspaces, ellipsoid)
    }

    pub fn translate(&self, v: &Vector) -> ConvexBody {
        let mut out = self.clone();
        for h in &mut out.halfspaces {
            h.offset += h.normal.dot(v);
        }
        out.ellipsoid.center += v;
        out
    }

    pub fn with_halfspace(&self, normal: Vector, offset: f64) -> Result<ConvexBody> {
        let mut hs = self.halfspaces.clone();
        hs.push(Halfspace { normal, offset });
        ConvexBody::new(hs, self.ellipsoid.clone())
    }

    /// {x ∈ body : |⟨θ, x⟩| ≤ half_width}.
    pub fn slab(&self, theta: &Vector, half_width: f64) -> Result<ConvexBody> {
        check_dim(self.dimension, theta.len())?;
        if (theta.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "slab direction must be a unit vector (norm {})",
                theta.norm()
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument("slab half-width must be positive".into()));
        }
        let out = self
            .with_halfspace(theta.clone(), half_width)?
            .with_halfspace(-theta.clone(), half_width)?;
        match out.chebyshev_center() {
            Ok((_, r)) if r > 1e-12 => Ok(out),
            _ => Err(Error::EmptySlab),
        }
    }

    pub fn support(&self, d: &Vector) -> Result<f64> {
        check_dim(self.dimension, d.len())?;
        if self.dimension == 1 {
            let (lo, hi) = self.interval_bounds()?;
            return Ok(if d[0] >= 0.0 { d[0] * hi } else { d[0] * lo });
        }
        Ok(conic::support(self, d)?.0)
    }

    /// Width of the body orthogonal to the hyperplane with unit normal v.
    pub fn width(&self, v: &Vector) -> Result<f64> {
        Ok(self.support(v)? + self.support(&-v)?)
    }

    pub fn chebyshev_center(&self) -> Result<(Vector, f64)> {
        if self.dimension == 1 {
            let (lo, hi) = self.interval_bounds()?;
            return Ok((linalg::vector(&[0.5 * (lo + hi)]), 0.5 * (hi - lo)));
        }
        conic::chebyshev_center(self)
    }

    pub fn project(&self, q: &Vector) -> Result<Vector> {
        check_dim(self.dimension, q.len())?;
        if self.dimension == 1 {
            let (lo, hi) = self.interval_bounds()?;
            return Ok(linalg::vector(&[q[0].clamp(lo, hi)]));
        }
        conic::project(self, q)
    }

    /// Endpoints of a one-dimensional body.
    pub fn interval_bounds(&self) -> Result<(f64, f64)> {
        if self.dimension != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.dimension,
            });
        }
        let x = linalg::vector(&[self.ellipsoid.center[0]]);
        let (lo, hi) = self
            .chord(&x, &linalg::vector(&[1.0]))
            .ok_or_else(|| Error::Infeasible("empty interval".into()))?;
        Ok((x[0] + lo, x[0] + hi))
    }

    /// Halfspaces implied by the ellipsoid alone are dropped.
    pub fn prune_redundant(&self) -> ConvexBody {
        let mut out = self.clone();
        out.halfspaces
            .retain(|h| self.ellipsoid.support(&h.normal) > h.offset + 1e-12);
        out
    }

    /// Some((lo, hi)) when the body is exactly an axis-aligned box.
    pub fn as_axis_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dimension;
        let mut lo = vec![f64::NEG_INFINITY; n];
        let mut hi = vec![f64::INFINITY; n];
        for h in &self.halfspaces {
            let axis = (0..n).find(|&i| (h.normal[i].abs() - 1.0).abs() < 1e-14)?;
            if (0..n).any(|j| j != axis && h.normal[j] != 0.0) {
                return None;
            }
            if h.normal[axis] > 0.0 {
                hi[axis] = hi[axis].min(h.offset);
            } else {
                lo[axis] = lo[axis].max(-h.offset);
            }
        }
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        // The ellipsoid must not cut the box: test every corner.
        for mask in 0..(1usize << n) {
            let corner = Vector::from_iterator(
                n,
                (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }),
            );
            if !self.ellipsoid.contains(&corner, 0.0) {
                return None;
            }
        }
        Some((lo, hi))
    }

    pub fn to_file(&self) -> BodyFile {
        let (center, radius) = self.bounding_ball();
        let ellipsoid = match self.ellipsoid.as_ball_radius() {
            Some(_) => None,
            None => Some(self.ellipsoid.clone()),
        };
        BodyFile {
            dimension: self.dimension,
            halfspaces: self.halfspaces.clone(),
            bounding_ball: BallFile { center, radius },
            ellipsoid,
        }
    }

    pub fn from_file(file: BodyFile) -> Result<Self> {
        let n = file.dimension;
        check_dim(n, file.bounding_ball.center.len())?;
        let ellipsoid = match file.ellipsoid {
            Some(e) => {
                check_dim(n, e.center.len())?;
                e
            }
            None => {
                if !(file.bounding_ball.radius > 0.0) {
                    return Err(Error::InvalidArgument("bounding radius must be positive".into()));
                }
                Ellipsoid::ball(file.bounding_ball.center, file.bounding_ball.radius)
            }
        };
        ConvexBody::new_checked(file.halfspaces, ellipsoid)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("body serializes")
    }
}

impl Serialize for ConvexBody {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexBody {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = BodyFile::deserialize(d)?;
        ConvexBody::from_file(file).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallFile {
    #[serde(with = "serde_vector")]
    pub center: Vector,
    pub radius: f64,
}

/// On-disk body description. `ellipsoid`, when present, replaces the ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyFile {
    pub dimension: usize,
    #[serde(default)]
    pub halfspaces: Vec<Halfspace>,
    pub bounding_ball: BallFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipsoid: Option<Ellipsoid>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    fn square() -> ConvexBody {
        ConvexBody::axis_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn contains_examples() {
        let b = square();
        assert!(b.contains(&vector(&[0.0, 0.0])).unwrap());
        assert!(!b.contains(&vector(&[2.0, 0.0])).unwrap());
        assert!(matches!(
            b.contains(&vector(&[0.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn support_examples() {
        let b = square();
        assert!((b.support(&vector(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-7);
        let d = vector(&[1.0, 1.0]) / 2f64.sqrt();
        assert!((b.support(&d).unwrap() - 2f64.sqrt()).abs() < 1e-7);
        let disk = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.0);
        for a in [0.0, 0.7, 2.0, 4.5] {
            let v = vector(&[f64::cos(a), f64::sin(a)]);
            assert!((disk.support(&v).unwrap() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn slab_examples() {
        let disk = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.0);
        let e1 = vector(&[1.0, 0.0]);
        let lens = disk.slab(&e1, 0.25).unwrap();
        assert!(!lens.contains(&vector(&[0.3, 0.0])).unwrap());
        assert!(lens.contains(&vector(&[0.2, 0.9])).unwrap());
        let wide = disk.slab(&e1, 2.0).unwrap();
        assert!(wide.prune_redundant().halfspaces.is_empty());
        assert!(matches!(
            disk.slab(&vector(&[1.0, 1.0]), 0.25),
            Err(Error::InvalidArgument(_))
        ));
        let far = disk.translate(&vector(&[5.0, 0.0]));
        assert!(matches!(far.slab(&e1, 0.25), Err(Error::EmptySlab)));
    }

    #[test]
    fn chord_of_disk_and_box() {
        let disk = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.0);
        let (lo, hi) = disk
            .chord(&vector(&[0.0, 0.5]), &vector(&[1.0, 0.0]))
            .unwrap();
        let half = 0.75f64.sqrt();
        assert!((lo + half).abs() < 1e-14 && (hi - half).abs() < 1e-14);
        let b = square();
        let (lo, hi) = b.chord(&vector(&[0.5, 0.0]), &vector(&[1.0, 0.0])).unwrap();
        assert!((lo + 1.5).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        assert!(b.chord(&vector(&[3.0, 3.0]), &vector(&[1.0, 0.0])).is_none());
    }

    #[test]
    fn transform_round_trip() {
        let b = square();
        let map = AffineMap {
            matrix: Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]),
            offset: vector(&[0.3, -1.0]),
        };
        let img = b.transform(&map).unwrap();
        let x = vector(&[0.9, -0.4]);
        assert!(img.contains(&map.apply(&x)).unwrap());
        let y = vector(&[1.1, 0.0]);
        assert!(!img.contains(&map.apply(&y)).unwrap());
        let back = img.transform(&map.inverse().unwrap()).unwrap();
        assert!(back.contains(&x).unwrap() && !back.contains(&y).unwrap());
    }

    #[test]
    fn box_detection() {
        assert!(square().as_axis_box().is_some());
        let disk = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.0);
        assert!(disk.as_axis_box().is_none());
        assert!(disk.slab(&vector(&[1.0, 0.0]), 0.25).unwrap().as_axis_box().is_none());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dimension": 2,
            "halfspaces": [{"normal": [2, 0], "offset": 1}, {"normal": [-1, 0], "offset": 0.5}],
            "bounding_ball": {"center": [0, 0], "radius": 1}}"#;
        let b = ConvexBody::from_json(text).unwrap();
        assert_eq!(b.halfspaces[0].normal, vector(&[1.0, 0.0]));
        assert_eq!(b.halfspaces[0].offset, 0.5);
        let again = ConvexBody::from_json(&b.to_json()).unwrap();
        assert_eq!(again, b);
    }

    #[test]
    fn interval_bounds_exact() {
        let b = ConvexBody::interval(0.25, 3.0).unwrap();
        let (lo, hi) = b.interval_bounds().unwrap();
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
    }

    #[test]
    fn polytope_gets_bounding_ball() {
        let tri = ConvexBody::polytope(
            2,
            vec![
                Halfspace { normal: vector(&[-1.0, 0.0]), offset: 0.0 },
                Halfspace { normal: vector(&[0.0, -1.0]), offset: 0.0 },
                Halfspace { normal: vector(&[1.0, 1.0]), offset: 1.0 },
            ],
        )
        .unwrap();
        for p in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
            assert!(tri.contains(&vector(&p)).unwrap());
        }
    }
}
