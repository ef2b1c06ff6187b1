//! Convex bodies, uniform sampling, moments and whitening.

mod body;
mod moments;
mod sampling;

pub use body::{AffineMap, BallFile, BodyFile, ConvexBody, Ellipsoid, Halfspace, GEOM_TOL};
pub use moments::{
    diameter_certificates, diameter_estimate, estimate_moments, estimate_moments_with, moments_of,
    volume_ratio, volume_ratio_with, whitening_map, DiameterCertificate, MomentEstimate,
    RatioEstimate, Whitening, EIGEN_FLOOR,
};
pub use sampling::{sample_many, sample_uniform, HitAndRunParams, UniformSampler};

/// Support function of the body in direction `d`.
pub fn support_function(body: &ConvexBody, d: &crate::linalg::Vector) -> crate::Result<f64> {
    body.support(d)
}

/// {x ∈ body : |⟨θ, x⟩| ≤ half_width}.
pub fn slab(body: &ConvexBody, theta: &crate::linalg::Vector, half_width: f64) -> crate::Result<ConvexBody> {
    body.slab(theta, half_width)
}

/// Default slab half-width.
pub const SLAB_HALF_WIDTH: f64 = 0.25;
