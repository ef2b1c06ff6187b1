//! Exploratory measures in dimension n ≥ 2: covers by stable-gradient balls,
//! the multi-scale slab iteration and the induction on dimension through
//! fibers of a thin slab.

mod cover;
mod multi;
pub mod profile;
mod search;
mod single;
mod triplet;

pub use cover::{
    build_gamma_cover, build_reduced_cover, caratheodory_reduce, min_norm_point, reduce_joint,
    verify_gamma_cover, CoverCheck, CoverParams, CoverResult, MinNormPoint, Reduction,
};
pub use multi::{multi_scale_measure, MultiScaleResult, MultiScaleTrace, StageTrace};
pub use profile::{calibration_n2, Calibration, CandidateRow, ProfileName, StageConstants, Validation};
pub use search::minimize_even;
pub use single::{no_good_direction_polytope, single_scale_measure, SingleScale};
pub use triplet::{
    ball_inside, concentration_fraction, find_jolly_good_triplet, remeasure, JollyGoodTriplet,
    TripletParams,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convexfn::{argmin, MaxAffineFunction, ARGMIN_TOL};
use crate::error::{check_dim, Error, Result};
use crate::explore1d::{build_measure_1d, Component, ExplorationMeasure, WeightedComponent};
use crate::geometry::{
    estimate_moments_with, whitening_map, AffineMap, ConvexBody, Ellipsoid, Halfspace, HitAndRunParams,
    MomentEstimate,
};
use crate::linalg::{complement_basis, direction_net, invert, sym_apply, sym_eigen, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub profile: ProfileName,
    pub moment_samples: usize,
    pub volume_samples: usize,
    pub cover: CoverParams,
    /// Overrides the default 8n(1 + ln(1 + n/ε)).
    pub iteration_cap: Option<usize>,
    /// Overrides the profile's stopping half-width.
    pub delta_stop: Option<f64>,
    pub max_dimension: usize,
    pub hit_and_run: HitAndRunParams,
    pub argmin_tol: f64,
    /// Support directions bounding a projected 2-D slab.
    pub projection_directions: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            profile: ProfileName::Calibrated,
            moment_samples: 20_000,
            volume_samples: 20_000,
            cover: CoverParams::default(),
            iteration_cap: None,
            delta_stop: None,
            max_dimension: 3,
            hit_and_run: HitAndRunParams::default(),
            argmin_tol: ARGMIN_TOL,
            projection_directions: 64,
        }
    }
}

impl BuildParams {
    pub fn with_profile(profile: ProfileName) -> Self {
        BuildParams {
            profile,
            ..Default::default()
        }
    }
}

/// Moments from a pilot run followed by a run preconditioned with the pilot
/// covariance, so hit-and-run mixes on elongated bodies.
pub fn isotropic_moments<R: Rng + ?Sized>(
    body: &ConvexBody,
    params: &BuildParams,
    rng: &mut R,
) -> Result<MomentEstimate> {
    let n = body.dimension;
    let m = params.moment_samples.max(100 * n * n);
    let pilot = estimate_moments_with(body, (m / 4).max(100 * n * n), rng, params.hit_and_run, None)?;
    let (vals, vecs) = sym_eigen(&pilot.covariance);
    let l = sym_apply(&vals, &vecs, |v| v.max(0.0).sqrt());
    estimate_moments_with(body, m, rng, params.hit_and_run, Some(l))
}

/// Orthogonal projection Tᵀ·body onto the columns of T (n×(n−1)).
/// Exact in 1-D; in 2-D the polygon cut out by `k` support lines, which
/// contains the projection.
pub fn project_body(body: &ConvexBody, t: &crate::linalg::Matrix, k: usize) -> Result<ConvexBody> {
    let m = t.ncols();
    match m {
        1 => {
            let c = t.column(0).into_owned();
            let hi = body.support(&c)?;
            let lo = -body.support(&-c)?;
            ConvexBody::interval(lo, hi)
        }
        2 => {
            let mut hs = Vec::with_capacity(k);
            let mut reach: f64 = 0.0;
            for d in direction_net(2, k) {
                let h = body.support(&(t * &d))?;
                reach = reach.max(h.abs());
                hs.push(Halfspace { normal: d, offset: h });
            }
            let radius = reach / (std::f64::consts::PI / k as f64).cos() * (1.0 + 1e-9) + 1e-12;
            ConvexBody::new(hs, Ellipsoid::ball(Vector::zeros(2), radius))
        }
        _ => Err(Error::InvalidArgument(format!("projection to dimension {m} is not supported"))),
    }
}

/// Measure plus the multi-scale traces of every recursion level (outermost
/// first).
#[derive(Clone, Debug)]
pub struct BuildOutput {
    pub measure: ExplorationMeasure,
    pub traces: Vec<MultiScaleTrace>,
}

pub fn build_exploratory_measure<R: Rng + ?Sized>(
    body: &ConvexBody,
    f: &MaxAffineFunction,
    eps: f64,
    params: &BuildParams,
    rng: &mut R,
) -> Result<ExplorationMeasure> {
    Ok(build_exploratory_measure_traced(body, f, eps, params, rng)?.measure)
}

pub fn build_exploratory_measure_traced<R: Rng + ?Sized>(
    body: &ConvexBody,
    f: &MaxAffineFunction,
    eps: f64,
    params: &BuildParams,
    rng: &mut R,
) -> Result<BuildOutput> {
    let n = body.dimension;
    check_dim(n, f.dimension)?;
    if n > params.max_dimension {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} exceeds the configured maximum {}",
            params.max_dimension
        )));
    }
    if n == 1 {
        return Ok(BuildOutput {
            measure: build_measure_1d(body, f, eps)?,
            traces: Vec::new(),
        });
    }
    let context = |e: Error| match e {
        Error::NonConvergence(s) => Error::NonConvergence(format!("dimension {n}: {s}")),
        Error::ExplorationFailure(s) => Error::ExplorationFailure(format!("dimension {n}: {s}")),
        other => other,
    };

    let x0 = argmin(f, body, params.argmin_tol)?;
    let x0 = if body.contains_tol(&x0, 0.0) { x0 } else { body.project(&x0)? };
    let mom = isotropic_moments(body, params, rng)?;
    let q = whitening_map(&mom)?.map.matrix;
    let q_inv = invert(&q)?;
    let w = body.translate(&-&x0).transform(&AffineMap::linear(q.clone()))?;
    let f_w = f.compose(&q_inv, &x0)?.shift(-f.value(&x0));

    let ms = multi_scale_measure(&f_w, &w, eps, params, rng).map_err(context)?;
    if !ms.trace.converged {
        return Err(Error::NonConvergence(format!(
            "dimension {n}: multi-scale iteration stopped at the cap of {} stages with half-width {:.3e} > {:.3e}",
            ms.trace.iteration_cap, ms.trace.final_half_width, ms.trace.delta_stop
        )));
    }
    let theta = ms.theta.clone();
    let y = ms.y.clone();
    let delta = ms.trace.delta_stop;
    let shift = theta.dot(&y);
    let host = w
        .with_halfspace(theta.clone(), delta + shift)?
        .with_halfspace(-theta.clone(), delta - shift)?;
    let t = complement_basis(&theta);
    let base_body = project_body(&host.translate(&-&y), &t, params.projection_directions)?;
    let up = &theta * delta;
    let h = f_w.compose(&t, &(&y + &up))?.max_with(&f_w.compose(&t, &(&y - &up))?)?;
    let h = if n == 2 { h.simplify_1d() } else { h };

    let inner = build_exploratory_measure_traced(&base_body, &h, eps, params, rng).map_err(context)?;
    let lift = ExplorationMeasure::new(
        n,
        vec![WeightedComponent {
            weight: 1.0,
            component: Component::FiberLift {
                base: Box::new(inner.measure),
                isometry: t,
                origin: y,
                direction: theta,
                host,
            },
        }],
    )?;
    let nf = n as f64;
    let mixed = ExplorationMeasure::mixture(vec![(1.0 / nf, ms.measure), ((nf - 1.0) / nf, lift)])?;
    let measure = mixed.pushforward(AffineMap {
        matrix: q_inv,
        offset: x0,
    });
    let mut traces = vec![ms.trace];
    traces.extend(inner.traces);
    Ok(BuildOutput { measure, traces })
}
