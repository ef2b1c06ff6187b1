//! Uniform sampling from convex bodies.
//!
//! Intervals, axis-aligned boxes and bare ellipsoids are sampled exactly.
//! Everything else uses hit-and-run started at the Chebyshev center.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::body::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{invert, Matrix, Vector};
use crate::rng;

/// Hit-and-run schedule. `None` means the defaults 50·n (burn-in) and n (thinning).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HitAndRunParams {
    pub burn_in: Option<usize>,
    pub thinning: Option<usize>,
}

impl HitAndRunParams {
    pub fn burn_in_for(&self, n: usize) -> usize {
        self.burn_in.unwrap_or(50 * n)
    }

    pub fn thinning_for(&self, n: usize) -> usize {
        self.thinning.unwrap_or(n).max(1)
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ellipsoid { center: Vector, inv_shape: Matrix },
    HitAndRun { state: Vector, thinning: usize, precond: Option<Matrix> },
}

/// A reusable sampler. Hit-and-run keeps its chain state between draws.
#[derive(Clone, Debug)]
pub struct UniformSampler {
    body: ConvexBody,
    kind: Kind,
}

impl UniformSampler {
    pub fn new<R: Rng + ?Sized>(body: &ConvexBody, params: HitAndRunParams, rng: &mut R) -> Result<Self> {
        Self::with_preconditioner(body, params, None, rng)
    }

    /// Hit-and-run directions are drawn as L·u/|L·u| with u uniform on the
    /// sphere; L ≈ Cov^{1/2} speeds up mixing on elongated bodies.
    pub fn with_preconditioner<R: Rng + ?Sized>(
        body: &ConvexBody,
        params: HitAndRunParams,
        precond: Option<Matrix>,
        rng: &mut R,
    ) -> Result<Self> {
        let n = body.dimension;
        if n == 1 {
            let (lo, hi) = body.interval_bounds()?;
            if !(hi >= lo) {
                return Err(Error::Infeasible("empty interval".into()));
            }
            return Ok(UniformSampler {
                body: body.clone(),
                kind: Kind::Interval { lo, hi },
            });
        }
        if let Some((lo, hi)) = body.as_axis_box() {
            return Ok(UniformSampler {
                body: body.clone(),
                kind: Kind::Box { lo, hi },
            });
        }
        let pruned = body.prune_redundant();
        if pruned.halfspaces.is_empty() {
            return Ok(UniformSampler {
                body: body.clone(),
                kind: Kind::Ellipsoid {
                    center: body.ellipsoid.center.clone(),
                    inv_shape: invert(&body.ellipsoid.shape)?,
                },
            });
        }
        let (start, _) = pruned
            .chebyshev_center()
            .map_err(|e| Error::Infeasible(format!("no interior start point: {e}")))?;
        if !pruned.contains_tol(&start, 1e-7) {
            return Err(Error::Infeasible("no interior start point".into()));
        }
        let mut s = UniformSampler {
            body: pruned,
            kind: Kind::HitAndRun {
                state: start,
                thinning: params.thinning_for(n),
                precond,
            },
        };
        for _ in 0..params.burn_in_for(n) {
            s.step(rng);
        }
        Ok(s)
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let Kind::HitAndRun { state, precond, .. } = &mut self.kind else {
            return;
        };
        let n = state.len();
        let mut d = rng::unit_sphere(rng, n);
        if let Some(l) = precond {
            d = &*l * d;
            let norm = d.norm();
            d /= norm;
        }
        if let Some((lo, hi)) = self.body.chord(state, &d) {
            let lo = lo.min(0.0);
            let hi = hi.max(0.0);
            let t = rng::uniform(rng, lo, hi);
            let next = &*state + d * t;
            if self.body.contains_tol(&next, 1e-12) {
                *state = next;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vector {
        match &self.kind {
            Kind::Interval { lo, hi } => Vector::from_element(1, rng::uniform(rng, *lo, *hi)),
            Kind::Box { lo, hi } => {
                Vector::from_iterator(lo.len(), lo.iter().zip(hi).map(|(a, b)| rng::uniform(rng, *a, *b)))
            }
            Kind::Ellipsoid { center, inv_shape } => {
                let u = rng::unit_ball(rng, center.len());
                center + inv_shape * u
            }
            Kind::HitAndRun { thinning, .. } => {
                let k = *thinning;
                for _ in 0..k {
                    self.step(rng);
                }
                match &self.kind {
                    Kind::HitAndRun { state, .. } => state.clone(),
                    _ => unreachable!(),
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.kind, Kind::HitAndRun { .. })
    }
}

/// One uniform draw (builds a fresh sampler, so hit-and-run pays burn-in).
pub fn sample_uniform<R: Rng + ?Sized>(
    body: &ConvexBody,
    rng: &mut R,
    params: HitAndRunParams,
) -> Result<Vector> {
    Ok(UniformSampler::new(body, params, rng)?.sample(rng))
}

/// `m` draws from one chain.
pub fn sample_many<R: Rng + ?Sized>(
    body: &ConvexBody,
    m: usize,
    rng: &mut R,
    params: HitAndRunParams,
) -> Result<Vec<Vector>> {
    let mut s = UniformSampler::new(body, params, rng)?;
    Ok((0..m).map(|_| s.sample(rng)).collect())
}
