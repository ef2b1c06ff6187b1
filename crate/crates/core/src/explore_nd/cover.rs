//! γ-covers of the sphere by gradient directions and separating normals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::StageConstants;
use super::triplet::{find_jolly_good_triplet, JollyGoodTriplet, TripletParams};
use crate::convexfn::{argmin, MaxAffineFunction};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{direction_net, serde_vector, serde_vectors, sym_eigen, Matrix, Vector};
use crate::rng;

/// Result of checking the cover property on sample points of the sphere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverCheck {
    pub covered: bool,
    /// min over checked x of max_θ ⟨θ, x⟩.
    pub worst_value: f64,
    #[serde(with = "serde_vector")]
    pub witness: Vector,
}

fn check_points(n: usize) -> Vec<Vector> {
    match n {
        1 => direction_net(1, 2),
        2 => direction_net(2, 7200),
        _ => direction_net(3, 4000),
    }
}

/// Checks max_θ ⟨θ, x⟩ ≥ −γ on a deterministic net plus m random points.
pub fn verify_gamma_cover<R: Rng + ?Sized>(
    directions: &[Vector],
    gamma: f64,
    m: usize,
    rng: &mut R,
) -> Result<CoverCheck> {
    let Some(first) = directions.first() else {
        return Err(Error::InvalidArgument("empty direction list".into()));
    };
    let n = first.len();
    let mut points = check_points(n);
    if n > 1 {
        points.extend((0..m).map(|_| rng::unit_sphere(rng, n)));
    }
    let mut worst = f64::INFINITY;
    let mut witness = points[0].clone();
    for x in points {
        let v = directions.iter().map(|t| t.dot(&x)).fold(f64::NEG_INFINITY, f64::max);
        if v < worst {
            worst = v;
            witness = x;
        }
    }
    Ok(CoverCheck {
        covered: worst >= -gamma,
        worst_value: worst,
        witness,
    })
}

/// Deterministic check used after reductions.
fn verify_fixed(directions: &[Vector], gamma: f64) -> Result<CoverCheck> {
    let mut r = rng::seeded(0x00c0_7e12);
    verify_gamma_cover(directions, gamma, 2000, &mut r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinNormPoint {
    #[serde(with = "serde_vector")]
    pub point: Vector,
    /// (index into the input, convex weight); weights sum to 1.
    pub weights: Vec<(usize, f64)>,
}

const WEIGHT_TOL: f64 = 1e-14;

/// argmin of |Σμ_k p_k|² subject to Σμ_k = 1 (pseudo-inverse of the KKT system).
fn affine_minimizer(points: &[Vector], set: &[usize]) -> Result<Vec<f64>> {
    let k = set.len();
    let mut kkt = Matrix::zeros(k + 1, k + 1);
    for (a, &i) in set.iter().enumerate() {
        for (b, &j) in set.iter().enumerate() {
            kkt[(a, b)] = 2.0 * points[i].dot(&points[j]);
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = Vector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = kkt
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Solver(format!("affine minimizer: {e}")))?;
    let mut mu: Vec<f64> = (0..k).map(|a| sol[a]).collect();
    let s: f64 = mu.iter().sum();
    if s.abs() > 1e-300 {
        for m in &mut mu {
            *m /= s;
        }
    }
    Ok(mu)
}

fn combination(points: &[Vector], set: &[usize], w: &[f64]) -> Vector {
    let mut x = Vector::zeros(points[set[0]].len());
    for (&i, &l) in set.iter().zip(w) {
        x += &points[i] * l;
    }
    x
}

/// Wolfe's algorithm for the point of least norm in conv(points).
pub fn min_norm_point(points: &[Vector]) -> Result<MinNormPoint> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("min-norm point of an empty set".into()));
    }
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale;
    let start = (0..points.len())
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .unwrap();
    let mut set = vec![start];
    let mut lam = vec![1.0];
    for _ in 0..(50 * points.len() + 50) {
        let x = combination(points, &set, &lam);
        let (j, xj) = (0..points.len())
            .map(|i| (i, x.dot(&points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if x.norm_squared() - xj <= tol || set.contains(&j) {
            break;
        }
        set.push(j);
        lam.push(0.0);
        for _ in 0..(set.len() + 5) {
            let mu = affine_minimizer(points, &set)?;
            if mu.iter().all(|&m| m > WEIGHT_TOL) {
                lam = mu;
                break;
            }
            let mut step: f64 = 1.0;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= WEIGHT_TOL && l - m > 0.0 {
                    step = step.min(l / (l - m));
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l = (1.0 - step) * *l + step * m;
            }
            let keep: Vec<bool> = lam.iter().map(|&l| l > WEIGHT_TOL).collect();
            if keep.iter().all(|k| !k) {
                break;
            }
            let mut k = 0;
            set.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            lam.retain(|&l| l > WEIGHT_TOL);
            let s: f64 = lam.iter().sum();
            for l in &mut lam {
                *l /= s;
            }
        }
    }
    let weights = reduce_support(points, set.into_iter().zip(lam).collect());
    let point = combination(
        points,
        &weights.iter().map(|w| w.0).collect::<Vec<_>>(),
        &weights.iter().map(|w| w.1).collect::<Vec<_>>(),
    );
    Ok(MinNormPoint { point, weights })
}

/// Removes affinely dependent supports until at most n+1 remain, keeping the
/// represented point fixed.
fn reduce_support(points: &[Vector], mut w: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let n = points[0].len();
    loop {
        w.retain(|x| x.1 > WEIGHT_TOL);
        let k = w.len();
        if k <= 1 {
            break;
        }
        let mut a = Matrix::zeros(n + 1, k);
        for (c, (i, _)) in w.iter().enumerate() {
            for r in 0..n {
                a[(r, c)] = points[*i][r];
            }
            a[(n, c)] = 1.0;
        }
        // Null vector of [P; 1ᵀ]: the bottom eigenvector of AᵀA.
        let (vals, vecs) = sym_eigen(&(a.transpose() * &a));
        if k <= n + 1 && vals[0] > 1e-20 * vals[k - 1].max(1.0) {
            break;
        }
        let mut null: Vec<f64> = (0..k).map(|c| vecs[(c, 0)]).collect();
        if null.iter().all(|v| *v <= 1e-14) {
            null.iter_mut().for_each(|v| *v = -*v);
        }
        let Some(drop) = (0..k)
            .filter(|&c| null[c] > 1e-14)
            .min_by(|&x, &y| (w[x].1 / null[x]).total_cmp(&(w[y].1 / null[y])))
        else {
            break;
        };
        let step = w[drop].1 / null[drop];
        for (c, v) in null.iter().enumerate() {
            w[c].1 -= step * v;
        }
        w[drop].1 = 0.0;
        let s: f64 = w.iter().map(|x| x.1.max(0.0)).sum();
        for x in &mut w {
            x.1 = x.1.max(0.0) / s;
        }
    }
    w.sort_by_key(|x| x.0);
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// The min-norm certificate uses triplet directions only.
    Triplets,
    /// Triplet directions and separating normals reduced together.
    Joint,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverResult {
    pub triplets: Vec<JollyGoodTriplet>,
    #[serde(with = "serde_vectors")]
    pub theta_set: Vec<Vector>,
    pub gamma: f64,
    pub reduced: Vec<JollyGoodTriplet>,
    /// Separating normals that take part in the reduced certificate.
    #[serde(with = "serde_vectors")]
    pub reduced_theta: Vec<Vector>,
    pub min_norm: f64,
    pub reduction: Option<Reduction>,
    /// Directions processed (net plus adaptive additions).
    pub directions: usize,
    pub refinements: usize,
    /// Number of times ξ was doubled after a failed search.
    pub relaxations: usize,
    #[serde(with = "serde_vector")]
    pub placement_center: Vector,
    pub placement_radius: f64,
    pub r_used: f64,
}

impl CoverResult {
    pub fn directions_of(&self) -> Vec<Vector> {
        let mut d: Vec<Vector> = self.triplets.iter().map(|t| t.theta.clone()).collect();
        d.extend(self.theta_set.iter().cloned());
        d
    }

    pub fn reduced_directions(&self) -> Vec<Vector> {
        let mut d: Vec<Vector> = self.reduced.iter().map(|t| t.theta.clone()).collect();
        d.extend(self.reduced_theta.iter().cloned());
        d
    }
}

fn finish_reduction(mut cover: CoverResult, check_with_theta: bool) -> Result<CoverResult> {
    let mut dirs = cover.reduced_directions();
    if check_with_theta {
        dirs.extend(cover.theta_set.iter().cloned());
    }
    let check = verify_fixed(&dirs, cover.gamma)?;
    if !check.covered {
        return Err(Error::Reverification(format!(
            "reduced set fails the cover check (worst {:.3e} at {:?})",
            check.worst_value,
            check.witness.as_slice()
        )));
    }
    cover.reduction.get_or_insert(Reduction::Triplets);
    Ok(cover)
}

/// Keeps at most n+1 triplets whose directions have a convex combination of
/// norm ≤ γ.
pub fn caratheodory_reduce(mut cover: CoverResult, gamma: f64) -> Result<CoverResult> {
    let pts: Vec<Vector> = cover.triplets.iter().map(|t| t.theta.clone()).collect();
    if pts.is_empty() {
        return Err(Error::MinNormTooLarge {
            norm: f64::INFINITY,
            gamma,
        });
    }
    let n = pts[0].len();
    let mnp = min_norm_point(&pts)?;
    let norm = mnp.point.norm();
    if norm > gamma {
        return Err(Error::MinNormTooLarge { norm, gamma });
    }
    cover.gamma = gamma;
    cover.min_norm = norm;
    cover.reduction = Some(Reduction::Triplets);
    cover.reduced_theta.clear();
    cover.reduced = if pts.len() <= n + 1 {
        cover.triplets.clone()
    } else {
        mnp.weights.iter().map(|(i, _)| cover.triplets[*i].clone()).collect()
    };
    finish_reduction(cover, true)
}

/// Reduction over triplet directions and separating normals together, for
/// when the triplet directions alone do not surround the origin.
pub fn reduce_joint(mut cover: CoverResult, gamma: f64) -> Result<CoverResult> {
    let pts = cover.directions_of();
    let h = cover.triplets.len();
    let mnp = min_norm_point(&pts)?;
    let norm = mnp.point.norm();
    if norm > gamma {
        return Err(Error::MinNormTooLarge { norm, gamma });
    }
    cover.gamma = gamma;
    cover.min_norm = norm;
    cover.reduction = Some(Reduction::Joint);
    cover.reduced = mnp
        .weights
        .iter()
        .filter(|(i, _)| *i < h)
        .map(|(i, _)| cover.triplets[*i].clone())
        .collect();
    cover.reduced_theta = mnp
        .weights
        .iter()
        .filter(|(i, _)| *i >= h)
        .map(|(i, _)| cover.theta_set[*i - h].clone())
        .collect();
    finish_reduction(cover, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverParams {
    /// Net size; default 64 for n=2 and 256 for n=3.
    pub net_size: Option<usize>,
    pub triplet_budget: usize,
    pub triplet: TripletParams,
    /// Times ξ may be doubled for a direction whose search fails.
    pub relax_steps: usize,
    /// Adaptive directions added when verification finds a gap.
    pub max_refinements: usize,
    pub verify_samples: usize,
}

impl Default for CoverParams {
    fn default() -> Self {
        CoverParams {
            net_size: None,
            triplet_budget: 32,
            triplet: TripletParams::default(),
            relax_steps: 3,
            max_refinements: 32,
            verify_samples: 4000,
        }
    }
}

impl CoverParams {
    pub fn net_size_for(&self, n: usize) -> usize {
        self.net_size.unwrap_or(match n {
            1 => 2,
            2 => 64,
            _ => 256,
        })
    }
}

enum Outcome {
    Separator(Vector),
    Triplet(JollyGoodTriplet, usize),
    Failed(Vector),
}

impl Outcome {
    fn describe(&self) -> String {
        match self {
            Outcome::Separator(v) => format!("separator {:?}", v.as_slice()),
            Outcome::Triplet(t, relax) => format!("triplet theta {:?} (relaxed {relax})", t.theta.as_slice()),
            Outcome::Failed(_) => "no triplet".into(),
        }
    }
}

struct Placement<'a> {
    f: &'a MaxAffineFunction,
    body: &'a ConvexBody,
    w: Vector,
    r: f64,
    radius: f64,
    delta: f64,
    xi: f64,
    params: CoverParams,
}

impl Placement<'_> {
    fn process(&self, phi: &Vector, seed: u64, stream: u64) -> Result<Outcome> {
        let mut r = rng::child(seed, stream);
        let q = phi / 8.0;
        if !self.body.contains_tol(&q, 1e-9) {
            let p = self.body.project(&q)?;
            let d = &q - p;
            if d.norm() > 1e-12 {
                let nu = &d / d.norm();
                if self.body.support(&nu)? <= 0.125 + 1e-9 {
                    return Ok(Outcome::Separator(nu));
                }
            }
        }
        let center = phi / 32.0 + &self.w * self.r;
        let mut xi = self.xi;
        for relax in 0..=self.params.relax_steps {
            match find_jolly_good_triplet(
                self.f,
                self.body,
                (&center, self.radius),
                xi,
                self.delta,
                self.params.triplet_budget,
                self.params.triplet,
                &mut r,
            ) {
                Ok(t) => return Ok(Outcome::Triplet(t, relax)),
                Err(Error::NoTriplet { best_fraction, .. }) => {
                    if relax < self.params.relax_steps {
                        log::warn!(
                            "no triplet near {:?} (best fraction {best_fraction:.3}); relaxing xi to {}",
                            phi.as_slice(),
                            2.0 * xi
                        );
                    }
                    xi *= 2.0;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(Outcome::Failed(phi.clone()))
    }
}

/// Builds H (triplet directions) and Θ (separating normals) over a direction
/// net, then adds directions where the cover check finds a gap.
pub fn build_gamma_cover<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    body: &ConvexBody,
    lipschitz: f64,
    constants: &StageConstants,
    params: &CoverParams,
    rng: &mut R,
) -> Result<CoverResult> {
    let n = body.dimension;
    if n < 2 {
        return Err(Error::InvalidArgument("covers are built in dimension ≥ 2".into()));
    }
    let origin = Vector::zeros(n);
    if !body.contains_tol(&origin, 1e-7) {
        return Err(Error::Precondition("the origin must lie in the body".into()));
    }
    let x0 = argmin(f, body, 1e-10)?;
    let f0 = f.value(&origin);
    // Solver accuracy at minima on curved boundaries is about 1e-6.
    let slack = 1e-5 * (1.0 + lipschitz);
    if f0.abs() > slack || f0 - f.value(&x0) > slack {
        return Err(Error::Precondition(format!(
            "function must be normalized with minimum 0 at the origin (f(0) = {f0:.3e}, min ≈ {:.3e})",
            f.value(&x0)
        )));
    }
    let (w, rho) = body.chebyshev_center()?;
    // Keep r|w| ≤ 1/256 so the offset stays small next to φ/32.
    let r_used = if w.norm() > 0.0 {
        constants.r.min(1.0 / (256.0 * w.norm()))
    } else {
        constants.r
    };
    let radius = r_used * rho;
    let delta = constants.delta(n, lipschitz, radius);
    let placement = Placement {
        f,
        body,
        w: w.clone(),
        r: r_used,
        radius,
        delta,
        xi: constants.xi,
        params: *params,
    };
    let seed: u64 = rng.random();
    let net = direction_net(n, params.net_size_for(n));
    let outcomes: Vec<Result<Outcome>> = net
        .par_iter()
        .enumerate()
        .map(|(k, phi)| placement.process(phi, seed, k as u64))
        .collect();
    let mut cover = CoverResult {
        triplets: Vec::new(),
        theta_set: Vec::new(),
        gamma: constants.gamma,
        reduced: Vec::new(),
        reduced_theta: Vec::new(),
        min_norm: f64::NAN,
        reduction: None,
        directions: net.len(),
        refinements: 0,
        relaxations: 0,
        placement_center: w,
        placement_radius: radius,
        r_used,
    };
    let mut failed = Vec::new();
    let mut absorb = |cover: &mut CoverResult, o: Outcome| match o {
        Outcome::Separator(v) => cover.theta_set.push(v),
        Outcome::Triplet(t, relax) => {
            cover.relaxations += relax;
            cover.triplets.push(t);
        }
        Outcome::Failed(phi) => failed.push(phi.as_slice().to_vec()),
    };
    for o in outcomes {
        absorb(&mut cover, o?);
    }
    let mut stream = net.len() as u64;
    loop {
        let dirs = cover.directions_of();
        let check = if dirs.is_empty() {
            None
        } else {
            let c = verify_gamma_cover(&dirs, constants.gamma, params.verify_samples, rng)?;
            if c.covered {
                break;
            }
            Some(c)
        };
        if cover.refinements >= params.max_refinements {
            if let Some(c) = check {
                failed.push(c.witness.as_slice().to_vec());
            }
            break;
        }
        let phi = match check {
            Some(c) => c.witness,
            None => rng::unit_sphere(rng, n),
        };
        cover.refinements += 1;
        cover.directions += 1;
        let o = placement.process(&phi, seed, stream)?;
        log::debug!("refinement at {:?}: {}", phi.as_slice(), o.describe());
        absorb(&mut cover, o);
        stream += 1;
    }
    if !failed.is_empty() {
        return Err(Error::CoverFailure { uncovered: failed });
    }
    Ok(cover)
}

/// Cover followed by reduction; falls back to the joint reduction when
/// the triplet directions alone are not enough.
pub fn build_reduced_cover<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    body: &ConvexBody,
    lipschitz: f64,
    constants: &StageConstants,
    params: &CoverParams,
    rng: &mut R,
) -> Result<CoverResult> {
    let cover = build_gamma_cover(f, body, lipschitz, constants, params, rng)?;
    let gamma = cover.gamma;
    if cover.triplets.is_empty() {
        return reduce_joint(cover, gamma);
    }
    match caratheodory_reduce(cover.clone(), gamma) {
        Ok(c) => Ok(c),
        Err(Error::MinNormTooLarge { .. }) => reduce_joint(cover, gamma),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore_nd::profile::ProfileName;
    use crate::linalg::vector;
    use crate::rng::seeded;

    fn e(i: usize, s: f64) -> Vector {
        let mut v = Vector::zeros(2);
        v[i] = s;
        v
    }

    fn dummy(theta: Vector) -> JollyGoodTriplet {
        JollyGoodTriplet {
            z: Vector::zeros(theta.len()),
            theta,
            t: 1.0,
            delta: 0.01,
            fraction: 1.0,
            xi: 0.25,
            samples: 1000,
        }
    }

    fn cover_of(dirs: Vec<Vector>) -> CoverResult {
        CoverResult {
            triplets: dirs.into_iter().map(dummy).collect(),
            theta_set: vec![],
            gamma: 1.0 / 32.0,
            reduced: vec![],
            reduced_theta: vec![],
            min_norm: f64::NAN,
            reduction: None,
            directions: 0,
            refinements: 0,
            relaxations: 0,
            placement_center: Vector::zeros(2),
            placement_radius: 0.0,
            r_used: 0.0,
        }
    }

    #[test]
    fn verify_examples() {
        let mut r = seeded(0);
        let axes = vec![e(0, 1.0), e(0, -1.0), e(1, 1.0), e(1, -1.0)];
        assert!(verify_gamma_cover(&axes, 0.0, 1000, &mut r).unwrap().covered);
        let one = vec![e(0, 1.0)];
        let c = verify_gamma_cover(&one, 1.0 / 32.0, 1000, &mut r).unwrap();
        assert!(!c.covered);
        assert!((c.witness - e(0, -1.0)).norm() < 1e-3);
        let pair = vec![e(0, 1.0), e(0, -1.0)];
        assert!(verify_gamma_cover(&pair, 0.0, 1000, &mut r).unwrap().covered);
        assert!(verify_gamma_cover(&[], 0.0, 10, &mut r).is_err());
    }

    #[test]
    fn min_norm_of_segment_and_triangle() {
        let p = vec![vector(&[1.0, 1.0]), vector(&[1.0, -1.0])];
        let m = min_norm_point(&p).unwrap();
        assert!((m.point - vector(&[1.0, 0.0])).norm() < 1e-12);
        let tri = vec![vector(&[1.0, 0.0]), vector(&[-0.5, 0.8]), vector(&[-0.5, -0.8])];
        let m = min_norm_point(&tri).unwrap();
        assert!(m.point.norm() < 1e-12);
        assert_eq!(m.weights.len(), 3);
        let s: f64 = m.weights.iter().map(|w| w.1).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_norm_against_projection_oracle() {
        // conv{(2,0),(0,2)}: the closest point is (1,1).
        let p = vec![vector(&[2.0, 0.0]), vector(&[0.0, 2.0]), vector(&[3.0, 3.0])];
        let m = min_norm_point(&p).unwrap();
        assert!((m.point - vector(&[1.0, 1.0])).norm() < 1e-10);
    }

    #[test]
    fn caratheodory_keeps_at_most_n_plus_one() {
        let net = direction_net(2, 12);
        let m = min_norm_point(&net).unwrap();
        assert!(m.point.norm() < 1e-10);
        assert!(m.weights.len() <= 3);
        let red = cover_of(vec![e(0, 1.0), e(0, -1.0), e(1, 1.0), e(1, -1.0)]);
        let out = caratheodory_reduce(red, 1.0 / 32.0).unwrap();
        assert!(out.reduced.len() <= 3);
        let dirs = out.reduced_directions();
        let mut r = seeded(1);
        assert!(verify_gamma_cover(&dirs, 1.0 / 32.0, 5000, &mut r).unwrap().covered);
    }

    #[test]
    fn small_cover_unchanged() {
        let dirs = vec![vector(&[1.0, 0.0]), vector(&[-0.5, 0.8]), vector(&[-0.5, -0.8])];
        let out = caratheodory_reduce(cover_of(dirs.clone()), 1.0 / 32.0).unwrap();
        assert_eq!(out.reduced.len(), 3);
        assert_eq!(out.reduced.iter().map(|t| t.theta.clone()).collect::<Vec<_>>(), dirs);
    }

    #[test]
    fn single_direction_is_not_a_cover() {
        match caratheodory_reduce(cover_of(vec![e(0, 1.0)]), 1.0 / 32.0) {
            Err(Error::MinNormTooLarge { norm, .. }) => assert!((norm - 1.0).abs() < 1e-12),
            other => panic!("expected MinNormTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_on_disk_cover() {
        let mut r = seeded(2);
        let f = MaxAffineFunction::from_pairs(&[(0.0, &[0.0, 0.0])], 1.0).unwrap();
        let body = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.5);
        let c = StageConstants::new(ProfileName::Calibrated, 2, 0.1);
        let cover = build_gamma_cover(&f, &body, 3.0, &c, &CoverParams::default(), &mut r).unwrap();
        assert!(cover.theta_set.is_empty());
        assert_eq!(cover.triplets.len(), 64);
        for t in &cover.triplets {
            // Gradient directions of |x|² point away from the origin.
            assert!(t.theta.dot(&t.z) > 0.0);
            assert!((t.theta.clone() - &t.z / t.z.norm()).norm() < 0.05);
        }
        assert!(verify_gamma_cover(&cover.directions_of(), 1.0 / 32.0, 4000, &mut r).unwrap().covered);
        let red = caratheodory_reduce(cover, 1.0 / 32.0).unwrap();
        assert!(red.reduced.len() <= 3);
    }

    #[test]
    fn tiny_body_takes_separation_branch() {
        let mut r = seeded(3);
        let f = MaxAffineFunction::from_pairs(&[(0.0, &[0.0, 0.0])], 1.0).unwrap();
        let body = ConvexBody::ball(&vector(&[0.0, 0.0]), 0.05);
        let c = StageConstants::new(ProfileName::Calibrated, 2, 0.1);
        let cover = build_gamma_cover(&f, &body, 3.0, &c, &CoverParams::default(), &mut r).unwrap();
        assert_eq!(cover.theta_set.len(), 64);
        assert!(cover.triplets.is_empty());
        for v in &cover.theta_set {
            assert!(body.support(v).unwrap() <= 0.125);
        }
        let red = reduce_joint(cover, 1.0 / 32.0).unwrap();
        assert!(red.reduced.is_empty());
        assert!(red.reduced_theta.len() <= 3);
    }

    #[test]
    fn unnormalized_function_rejected() {
        let mut r = seeded(4);
        let f = MaxAffineFunction::from_pairs(&[(0.0, &[1.0, 0.0]), (-0.5, &[-1.0, 0.0])], 1.0).unwrap();
        let body = ConvexBody::ball(&vector(&[0.0, 0.0]), 1.0);
        let c = StageConstants::new(ProfileName::Calibrated, 2, 0.1);
        assert!(matches!(
            build_gamma_cover(&f, &body, 3.0, &c, &CoverParams::default(), &mut r),
            Err(Error::Precondition(_))
        ));
    }
}
