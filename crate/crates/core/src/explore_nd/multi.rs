//! Repeated single-scale steps on nested slabs, each re-whitened, until the
//! remaining domain fits in a thin slab through the minimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::profile::{self, ProfileName, StageConstants};
use super::search::minimize_even;
use super::single::single_scale_measure;
use super::{isotropic_moments, BuildParams};
use crate::convexfn::{argmin, MaxAffineFunction};
use crate::error::{Error, Result};
use crate::explore1d::ExplorationMeasure;
use crate::geometry::{volume_ratio_with, whitening_map, AffineMap, ConvexBody, RatioEstimate};
use crate::linalg::{invert, serde_matrix, serde_vector, Matrix, Vector};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTrace {
    pub index: usize,
    /// Q_i, mapping the stage domain Ω_i onto the whitened body W_i.
    #[serde(with = "serde_matrix")]
    pub whitening: Matrix,
    pub condition_number: f64,
    /// Refined minimizer, relative to x₀; W_i = Q_i(Ω_i − center).
    #[serde(with = "serde_vector")]
    pub center: Vector,
    pub domain: ConvexBody,
    pub whitened: ConvexBody,
    /// f_i on W_i after regularization.
    pub function: MaxAffineFunction,
    pub lipschitz: f64,
    /// Slab direction in W_i coordinates.
    #[serde(with = "serde_vector")]
    pub direction: Vector,
    pub volume_ratio: RatioEstimate,
    pub cover: super::CoverResult,
    pub certified_half_width: f64,
    pub inscribed_radius: f64,
    /// Centered half-width of Ω_i before this stage ran.
    pub domain_half_width: f64,
    /// Stage measure in W_i coordinates.
    pub measure: ExplorationMeasure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiScaleTrace {
    pub profile: ProfileName,
    pub constants: StageConstants,
    pub eps: f64,
    pub delta_stop: f64,
    pub iteration_cap: usize,
    /// Number of stages N.
    pub n_stages: usize,
    pub converged: bool,
    /// Minimizer x₀ (coordinates of the input body).
    #[serde(with = "serde_vector")]
    pub origin: Vector,
    /// Refined minimizer at stage N, relative to x₀.
    #[serde(with = "serde_vector")]
    pub final_center: Vector,
    pub stages: Vec<StageTrace>,
    /// Ω_N, relative to x₀.
    pub final_domain: ConvexBody,
    pub final_half_width: f64,
    #[serde(with = "serde_vector")]
    pub final_direction: Vector,
}

impl MultiScaleTrace {
    pub fn domains(&self) -> Vec<&ConvexBody> {
        let mut d: Vec<&ConvexBody> = self.stages.iter().map(|s| &s.domain).collect();
        d.push(&self.final_domain);
        d
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Clone, Debug)]
pub struct MultiScaleResult {
    /// Mixture over stages in the input coordinates.
    pub measure: ExplorationMeasure,
    pub trace: MultiScaleTrace,
    /// Center of the final slab: x₀ plus the refined offset.
    pub y: Vector,
    /// Unit normal of the final thin slab.
    pub theta: Vector,
}

/// min over unit θ of max(h_Ω(θ), h_Ω(−θ)) for Ω = Q⁻¹W, computed in W.
fn centered_half_width(w: &ConvexBody, q: &Matrix) -> Result<(Vector, f64)> {
    let qt = q.transpose();
    let (d, val) = minimize_even(w.dimension, |d| {
        let h = w.support(d)?.max(w.support(&-d)?);
        Ok(h / (&qt * d).norm())
    })?;
    let theta = &qt * d;
    let norm = theta.norm();
    Ok((theta / norm, val))
}

pub fn multi_scale_measure<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    body: &ConvexBody,
    eps: f64,
    params: &BuildParams,
    rng: &mut R,
) -> Result<MultiScaleResult> {
    let n = body.dimension;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "multi-scale construction needs n ≥ 2; use build_measure_1d for intervals".into(),
        ));
    }
    crate::error::check_dim(n, f.dimension)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let constants = StageConstants::new(params.profile, n, eps);
    let delta_stop = params
        .delta_stop
        .unwrap_or_else(|| profile::delta_stop(params.profile, n, eps));
    let cap = params.iteration_cap.unwrap_or_else(|| profile::iteration_cap(n, eps));

    let x0 = argmin(f, body, params.argmin_tol)?;
    let x0 = if body.contains_tol(&x0, 0.0) { x0 } else { body.project(&x0)? };
    let fx0 = f.value(&x0);
    let f_omega = f.compose(&Matrix::identity(n, n), &x0)?.shift(-fx0);
    let mut omega = body.translate(&-&x0);

    let mom = isotropic_moments(&omega, params, rng)?;
    let mut q = whitening_map(&mom)?.map.matrix;
    let mut q_inv = invert(&q)?;
    let mut w_body = omega.transform(&AffineMap::linear(q.clone()))?;
    // Stage center relative to x₀. Whitening magnifies the error of x₀ along
    // the thin directions, so the minimizer is located again in every
    // whitened frame, where the solve is well conditioned.
    let mut center = Vector::zeros(n);

    let mut stages: Vec<StageTrace> = Vec::new();
    let mut parts: Vec<(AffineMap, ExplorationMeasure)> = Vec::new();
    let (final_theta, final_hw, converged) = loop {
        let g = f_omega.compose(&q_inv, &center)?;
        let y = argmin(&g, &w_body, params.argmin_tol)?;
        let y = if w_body.contains_tol(&y, 0.0) { y } else { w_body.project(&y)? };
        center += &q_inv * &y;
        w_body = w_body.translate(&-&y);

        let (theta, hw) = centered_half_width(&w_body, &q)?;
        log::debug!("stage {}: correction {:.2e}, half-width {hw:.3e}", stages.len(), y.norm());
        if hw <= delta_stop {
            break (theta, hw, true);
        }
        if stages.len() >= cap {
            log::warn!("multi-scale iteration hit the cap of {cap} stages (half-width {hw:.3e} > {delta_stop:.3e})");
            break (theta, hw, false);
        }
        let f_i = f_omega
            .compose(&q_inv, &center)?
            .shift(-f_omega.value(&center))
            .regularize(constants.eta.used)?;
        let lipschitz = f_i.lipschitz_bound(&w_body).max(1.0);
        let ss = single_scale_measure(&f_i, &w_body, lipschitz, &constants, &params.cover, rng)?;
        let v = ss.direction.clone();
        let slab = w_body.slab(&v, constants.slab_half_width)?;
        let ratio = volume_ratio_with(&slab, &w_body, params.volume_samples, rng, params.hit_and_run)?;

        let cond = {
            let sv = q.singular_values();
            sv.max() / sv.min()
        };
        parts.push((
            AffineMap {
                matrix: q_inv.clone(),
                offset: &x0 + &center,
            },
            ss.measure.clone(),
        ));
        let normal = q.transpose() * &v;
        let shift = normal.dot(&center);
        let next_omega = omega
            .with_halfspace(normal.clone(), constants.slab_half_width + shift)?
            .with_halfspace(-normal, constants.slab_half_width - shift)?;
        stages.push(StageTrace {
            index: stages.len(),
            whitening: q.clone(),
            condition_number: cond,
            center: center.clone(),
            domain: omega.clone(),
            whitened: w_body.clone(),
            function: f_i,
            lipschitz,
            direction: v,
            volume_ratio: ratio,
            cover: ss.cover,
            certified_half_width: ss.certified_half_width,
            inscribed_radius: ss.inscribed_radius,
            domain_half_width: hw,
            measure: ss.measure,
        });

        // Re-whiten the slab within the current frame, then compose.
        let mom = isotropic_moments(&slab, params, rng)?;
        let a = whitening_map(&mom)?.map.matrix;
        w_body = slab.transform(&AffineMap::linear(a.clone()))?;
        q = &a * &q;
        q_inv = &q_inv * invert(&a)?;
        omega = next_omega;
    };

    let measure = if parts.is_empty() {
        ExplorationMeasure::atom(&x0 + &center)
    } else {
        let w = 1.0 / parts.len() as f64;
        ExplorationMeasure::mixture(parts.into_iter().map(|(map, m)| (w, m.pushforward(map))).collect())?
    };
    let trace = MultiScaleTrace {
        profile: params.profile,
        constants,
        eps,
        delta_stop,
        iteration_cap: cap,
        n_stages: stages.len(),
        converged,
        origin: x0.clone(),
        final_center: center.clone(),
        stages,
        final_domain: omega,
        final_half_width: final_hw,
        final_direction: final_theta.clone(),
    };
    Ok(MultiScaleResult {
        measure,
        trace,
        y: x0 + center,
        theta: final_theta,
    })
}
