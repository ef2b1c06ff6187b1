//! One scale: a mixture of small balls with stable gradients plus a slab
//! direction outside of which some ball's gradient points the right way.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cover::{build_reduced_cover, CoverParams, CoverResult};
use super::profile::StageConstants;
use super::search::minimize_even;
use crate::convexfn::MaxAffineFunction;
use crate::error::Result;
use crate::explore1d::{Component, ExplorationMeasure, WeightedComponent};
use crate::geometry::ConvexBody;
use crate::linalg::{serde_vector, Vector};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleScale {
    pub measure: ExplorationMeasure,
    #[serde(with = "serde_vector")]
    pub direction: Vector,
    pub cover: CoverResult,
    /// max(h_P(v), h_P(−v)) for the polytope P where no reduced direction
    /// exceeds the level; at most the slab half-width when the slab certifies.
    pub certified_half_width: f64,
    /// Inscribed radius of P.
    pub inscribed_radius: f64,
    pub lipschitz: f64,
}

/// {x ∈ body : ⟨x, θ⟩ ≤ level for every reduced triplet direction θ}.
pub fn no_good_direction_polytope(body: &ConvexBody, cover: &CoverResult, level: f64) -> Result<ConvexBody> {
    let mut p = body.clone();
    for t in &cover.reduced {
        p = p.with_halfspace(t.theta.clone(), level)?;
    }
    Ok(p)
}

pub fn single_scale_measure<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    body: &ConvexBody,
    lipschitz: f64,
    constants: &StageConstants,
    params: &CoverParams,
    rng: &mut R,
) -> Result<SingleScale> {
    let n = body.dimension;
    let cover = build_reduced_cover(f, body, lipschitz, constants, params, rng)?;
    let measure = if cover.reduced.is_empty() {
        // Every reduced direction separates: the whole body is within the
        // level, so only the slab matters.
        ExplorationMeasure::atom(Vector::zeros(n))
    } else {
        let w = 1.0 / cover.reduced.len() as f64;
        ExplorationMeasure::new(
            n,
            cover
                .reduced
                .iter()
                .map(|t| WeightedComponent {
                    weight: w,
                    component: Component::Ball {
                        center: t.z.clone(),
                        radius: t.delta,
                    },
                })
                .collect(),
        )?
    };
    let poly = no_good_direction_polytope(body, &cover, constants.level)?;
    let (direction, half) = minimize_even(n, |v| Ok(poly.support(v)?.max(poly.support(&-v)?)))?;
    let (_, inscribed) = poly.chebyshev_center()?;
    if half > constants.slab_half_width * (1.0 + 1e-6) {
        log::warn!(
            "slab direction certifies half-width {half:.4} > {}; guarantee outside the slab is not certified",
            constants.slab_half_width
        );
    }
    Ok(SingleScale {
        measure,
        direction,
        cover,
        certified_half_width: half,
        inscribed_radius: inscribed,
        lipschitz,
    })
}
