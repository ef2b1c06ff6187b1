//! Convex functions of the form max_j (a_j + ⟨y_j, x⟩) + η|x|² (+ xᵀPx).
//!
//! The optional extra quadratic form P keeps the class closed under affine
//! changes of variables, which the dimension recursion needs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conic;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{AffineMap, ConvexBody};
use crate::linalg::{self, serde_matrix, serde_vector, spectral_norm, sym_eigen, Matrix, Vector};
use crate::rng;

/// Lower limit applied to the regularization coefficient.
pub const ETA_FLOOR: f64 = 1e-12;

/// Default argmin tolerance on function values.
pub const ARGMIN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub a: f64,
    #[serde(with = "serde_vector")]
    pub y: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxAffineFunction {
    pub dimension: usize,
    #[serde(default)]
    pub eta: f64,
    pub pieces: Vec<Piece>,
    /// Additional PSD quadratic form xᵀPx.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    pub quadratic: Option<Matrix>,
}

mod opt_matrix {
    use super::Matrix;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Matrix>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            Some(m) => super::serde_matrix::serialize(m, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Matrix>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::serde_matrix")] Matrix);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradientEstimate {
    #[serde(with = "serde_vector")]
    pub vector: Vector,
    pub radius: f64,
    pub sample_count: usize,
}

/// η actually used versus the formula it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub formula: f64,
    pub used: f64,
    pub floored: bool,
}

impl EtaChoice {
    /// (ε / (2²⁰ n¹⁰))², floored at [`ETA_FLOOR`].
    pub fn paper_default(eps: f64, n: usize) -> Self {
        let formula = (eps / (2f64.powi(20) * (n as f64).powi(10))).powi(2);
        let floored = formula < ETA_FLOOR;
        EtaChoice {
            formula,
            used: formula.max(ETA_FLOOR),
            floored,
        }
    }

    pub fn fixed(eta: f64) -> Self {
        EtaChoice {
            formula: eta,
            used: eta,
            floored: false,
        }
    }
}

impl MaxAffineFunction {
    pub fn new(pieces: Vec<Piece>, eta: f64) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidArgument("a max-affine function needs at least one piece".into()));
        };
        let n = first.y.len();
        let f = MaxAffineFunction {
            dimension: n,
            eta,
            pieces,
            quadratic: None,
        };
        f.validate()?;
        Ok(f)
    }

    /// Convenience constructor from (a, y) pairs.
    pub fn from_pairs(pairs: &[(f64, &[f64])], eta: f64) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(a, y)| Piece {
                    a: *a,
                    y: linalg::vector(y),
                })
                .collect(),
            eta,
        )
    }

    pub fn constant(n: usize, c: f64) -> Self {
        MaxAffineFunction {
            dimension: n,
            eta: 0.0,
            pieces: vec![Piece {
                a: c,
                y: Vector::zeros(n),
            }],
            quadratic: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::InvalidArgument("a max-affine function needs at least one piece".into()));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument("eta must be finite and ≥ 0".into()));
        }
        for p in &self.pieces {
            check_dim(self.dimension, p.y.len())?;
            if !p.a.is_finite() || !linalg::all_finite(&p.y) {
                return Err(Error::InvalidArgument("pieces must be finite".into()));
            }
        }
        if let Some(q) = &self.quadratic {
            check_dim(self.dimension, q.nrows())?;
            check_dim(self.dimension, q.ncols())?;
            if linalg::max_asymmetry(q) > 1e-12 * (1.0 + q.norm()) {
                return Err(Error::NonSymmetric(linalg::max_asymmetry(q)));
            }
            let (vals, _) = sym_eigen(q);
            if vals[0] < -1e-12 * (1.0 + q.norm()) {
                return Err(Error::InvalidArgument("quadratic form must be PSD".into()));
            }
        }
        Ok(())
    }

    /// ηI + P.
    pub fn quad_matrix(&self) -> Matrix {
        let n = self.dimension;
        let mut m = Matrix::identity(n, n) * self.eta;
        if let Some(q) = &self.quadratic {
            m += q;
        }
        m
    }

    fn quad_value(&self, x: &Vector) -> f64 {
        let mut v = self.eta * x.norm_squared();
        if let Some(q) = &self.quadratic {
            v += x.dot(&(q * x));
        }
        v
    }

    fn quad_gradient(&self, x: &Vector) -> Vector {
        let mut g = x * (2.0 * self.eta);
        if let Some(q) = &self.quadratic {
            g += q * x * 2.0;
        }
        g
    }

    /// Index of the active piece; ties go to the lowest index.
    pub fn active_piece(&self, x: &Vector) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (j, p) in self.pieces.iter().enumerate() {
            let v = p.a + p.y.dot(x);
            if v > val {
                val = v;
                best = j;
            }
        }
        best
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        check_dim(self.dimension, x.len())?;
        Ok(self.value(x))
    }

    /// Evaluation without the dimension check.
    pub fn value(&self, x: &Vector) -> f64 {
        let lin = self
            .pieces
            .iter()
            .map(|p| p.a + p.y.dot(x))
            .fold(f64::NEG_INFINITY, f64::max);
        lin + self.quad_value(x)
    }

    pub fn subgradient(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dimension, x.len())?;
        Ok(self.grad(x))
    }

    /// Subgradient without the dimension check.
    pub fn grad(&self, x: &Vector) -> Vector {
        &self.pieces[self.active_piece(x)].y + self.quad_gradient(x)
    }

    /// The same pieces with η replaced.
    pub fn regularize(&self, eta_new: f64) -> Result<MaxAffineFunction> {
        if !(eta_new >= 0.0) || !eta_new.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be ≥ 0, got {eta_new}")));
        }
        let mut out = self.clone();
        out.eta = eta_new;
        Ok(out)
    }

    /// Strong-convexity modulus 2·λmin(ηI + P).
    pub fn strong_convexity(&self) -> f64 {
        let (vals, _) = sym_eigen(&self.quad_matrix());
        2.0 * vals[0].max(0.0)
    }

    /// Lipschitz bound over a body: max_j |y_j| + 2‖ηI+P‖·sup_{x∈body}|x|.
    pub fn lipschitz_bound(&self, body: &ConvexBody) -> f64 {
        let (c, r) = body.bounding_ball();
        self.lipschitz_bound_radius(c.norm() + r)
    }

    pub fn lipschitz_bound_radius(&self, radius: f64) -> f64 {
        let ymax = self.pieces.iter().map(|p| p.y.norm()).fold(0.0, f64::max);
        ymax + 2.0 * spectral_norm(&self.quad_matrix()) * radius
    }

    /// x ↦ f(x) + c.
    pub fn shift(&self, c: f64) -> MaxAffineFunction {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.a += c;
        }
        out
    }

    /// x ↦ s·f(x) for s ≥ 0.
    pub fn scale(&self, s: f64) -> MaxAffineFunction {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.a *= s;
            p.y *= s;
        }
        out.eta *= s;
        out.quadratic = out.quadratic.map(|q| q * s);
        out
    }

    /// x ↦ f(M x + b) for an m×k matrix M (k may differ from n).
    pub fn compose(&self, matrix: &Matrix, offset: &Vector) -> Result<MaxAffineFunction> {
        check_dim(self.dimension, matrix.nrows())?;
        check_dim(self.dimension, offset.len())?;
        let k = matrix.ncols();
        let p = self.quad_matrix();
        let lin = &p * offset * 2.0;
        let c = offset.dot(&(&p * offset));
        let pieces = self
            .pieces
            .iter()
            .map(|pc| Piece {
                a: pc.a + pc.y.dot(offset) + c,
                y: matrix.transpose() * (&pc.y + &lin),
            })
            .collect();
        let qm = matrix.transpose() * p * matrix;
        let qm = (&qm + qm.transpose()) * 0.5;
        let has_q = qm.iter().any(|v| *v != 0.0);
        Ok(MaxAffineFunction {
            dimension: k,
            eta: 0.0,
            pieces,
            quadratic: has_q.then_some(qm),
        })
    }

    /// x ↦ f(map(x)).
    pub fn compose_affine(&self, map: &AffineMap) -> Result<MaxAffineFunction> {
        self.compose(&map.matrix, &map.offset)
    }

    /// Pointwise maximum; both functions must share the quadratic part.
    pub fn max_with(&self, other: &MaxAffineFunction) -> Result<MaxAffineFunction> {
        check_dim(self.dimension, other.dimension)?;
        let d = (self.quad_matrix() - other.quad_matrix()).norm();
        if d > 1e-12 * (1.0 + self.quad_matrix().norm()) {
            return Err(Error::InvalidArgument(
                "pointwise max needs identical quadratic terms".into(),
            ));
        }
        let mut out = self.clone();
        out.pieces.extend(other.pieces.iter().cloned());
        Ok(out)
    }

    /// Drop pieces that are never active anywhere in R (1-D only, exact).
    pub fn simplify_1d(&self) -> MaxAffineFunction {
        if self.dimension != 1 {
            return self.clone();
        }
        let mut ps: Vec<Piece> = self.pieces.clone();
        ps.sort_by(|p, q| p.y[0].total_cmp(&q.y[0]).then(q.a.total_cmp(&p.a)));
        ps.dedup_by(|q, p| q.y[0] == p.y[0]);
        // Upper envelope of lines ordered by slope.
        let mut hull: Vec<Piece> = Vec::new();
        for p in ps {
            while hull.len() >= 2 {
                let l1 = &hull[hull.len() - 2];
                let l2 = &hull[hull.len() - 1];
                // l2 is useless if l1 and p meet at or above l2.
                let x12 = (l1.a - l2.a) / (l2.y[0] - l1.y[0]);
                let x1p = (l1.a - p.a) / (p.y[0] - l1.y[0]);
                if x1p <= x12 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut out = self.clone();
        out.pieces = hull;
        out
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: MaxAffineFunction = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("function serializes")
    }
}

/// Mean subgradient over m uniform points of B(x, δ).
pub fn smoothed_gradient<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    x: &Vector,
    delta: f64,
    m: usize,
    rng: &mut R,
) -> Result<GradientEstimate> {
    check_dim(f.dimension, x.len())?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("smoothing radius must be positive".into()));
    }
    if m < 100 {
        return Err(Error::InvalidArgument(format!("smoothed gradient needs m ≥ 100, got {m}")));
    }
    let n = f.dimension;
    let mut acc = Vector::zeros(n);
    for _ in 0..m {
        let p = x + rng::unit_ball(rng, n) * delta;
        acc += f.grad(&p);
    }
    Ok(GradientEstimate {
        vector: acc / m as f64,
        radius: delta,
        sample_count: m,
    })
}

/// Minimizer over the body within `tol` of the optimal value. Among
/// near-optimal points (value ≤ min + tol/2) the lexicographically smallest
/// is returned, which makes flat minima deterministic.
pub fn argmin(f: &MaxAffineFunction, body: &ConvexBody, tol: f64) -> Result<Vector> {
    check_dim(f.dimension, body.dimension)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("argmin tolerance must be positive".into()));
    }
    let pieces: Vec<(f64, Vector)> = f.pieces.iter().map(|p| (p.a, p.y.clone())).collect();
    let q = f.quad_matrix();
    let (x0, _) = conic::minimize_max_affine(body, &pieces, &q)?;
    let x0 = body.project(&x0).unwrap_or(x0);
    let v0 = f.value(&x0);
    let level = v0 + 0.5 * tol;
    let n = f.dimension;
    let mut current = body.clone();
    let mut x = x0.clone();
    for k in 0..n {
        let c = linalg::unit(n, k);
        match conic::minimize_linear_in_sublevel(&current, &pieces, &q, level, &c) {
            Ok(xk) if f.value(&xk) <= v0 + tol && body.contains_tol(&xk, 1e-8) => {
                x = xk;
                current = current.with_halfspace(c, x[k] + 1e-12)?;
            }
            _ => break,
        }
    }
    if f.value(&x) > v0 + tol {
        return Err(Error::NonConvergence(format!(
            "argmin value {} exceeds {} + tol",
            f.value(&x),
            v0
        )));
    }
    Ok(x)
}

/// Exact max-affine form, on [lo, hi], of Σ w_s f_s for 1-D functions.
/// Quadratic coefficients add up; the piecewise-linear part is rebuilt from
/// every breakpoint in the interval.
pub fn weighted_sum_1d(terms: &[(f64, &MaxAffineFunction)], lo: f64, hi: f64) -> Result<MaxAffineFunction> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("empty sum".into()));
    }
    let mut eta = 0.0;
    let mut quad = 0.0;
    let mut cuts = vec![lo, hi];
    for (w, f) in terms {
        check_dim(1, f.dimension)?;
        eta += w * f.eta;
        if let Some(q) = &f.quadratic {
            quad += w * q[(0, 0)];
        }
        let ps = &f.pieces;
        for i in 0..ps.len() {
            for j in (i + 1)..ps.len() {
                let ds = ps[j].y[0] - ps[i].y[0];
                if ds != 0.0 {
                    let x = (ps[i].a - ps[j].a) / ds;
                    if x > lo && x < hi {
                        cuts.push(x);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut pieces = Vec::new();
    for win in cuts.windows(2) {
        let mid = linalg::vector(&[0.5 * (win[0] + win[1])]);
        let (mut a, mut y) = (0.0, 0.0);
        for (w, f) in terms {
            let p = &f.pieces[f.active_piece(&mid)];
            a += w * p.a;
            y += w * p.y[0];
        }
        pieces.push(Piece {
            a,
            y: linalg::vector(&[y]),
        });
    }
    let mut out = MaxAffineFunction::new(pieces, eta)?;
    if quad != 0.0 {
        out.quadratic = Some(Matrix::from_element(1, 1, quad));
    }
    Ok(out.simplify_1d())
}

/// Lower max-affine model built from tangent planes at `points`; exact at
/// those points.
pub fn tangent_fit(
    points: &[Vector],
    value_grad: impl Fn(&Vector) -> (f64, Vector),
) -> Result<MaxAffineFunction> {
    let pieces = points
        .iter()
        .map(|p| {
            let (v, g) = value_grad(p);
            Piece { a: v - g.dot(p), y: g }
        })
        .collect();
    MaxAffineFunction::new(pieces, 0.0)
}
