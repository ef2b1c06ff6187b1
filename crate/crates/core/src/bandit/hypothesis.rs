//! The single-measurement test of f against an alternative g: draw x ~ μ,
//! observe h(x) + N(0, σ²), reject when the residual y − f(x), scaled by
//! max(ε, f(x)), is large.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convexfn::MaxAffineFunction;
use crate::error::{check_dim, Error, Result};
use crate::explore1d::ExplorationMeasure;
use crate::rng;
use crate::stats;

pub const LEVEL: f64 = 0.05;
const TV_BINS: usize = 64;

/// How the scaled residual is turned into a statistic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// |y − f(x)|/max(ε, f(x)), two-sided.
    #[default]
    Absolute,
    /// (f(x) − y)/max(ε, f(x)): one-sided, large when h lies below f.
    Signed,
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" | "absolute" => Ok(Statistic::Absolute),
            "signed" => Ok(Statistic::Signed),
            _ => Err(Error::InvalidArgument(format!("unknown statistic {s:?} (expected abs or signed)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub statistic: Statistic,
    pub level: f64,
    /// Rejection threshold on the statistic, the empirical (1 − level)
    /// quantile under h = f.
    pub threshold: f64,
    /// Rejection rate on fresh draws under h = f.
    pub level_observed: f64,
    pub power: f64,
    pub power_ci: (f64, f64),
    /// Binomial σ of a rejection rate equal to the level.
    pub level_sigma: f64,
    /// power − observed level: a lower estimate of the total variation
    /// between the two observation laws.
    pub tv_lower_estimate: f64,
    /// Plug-in TV between binned statistics (biased upward by binning noise).
    pub tv_binned: f64,
    pub trials: usize,
    pub noise_sigma: f64,
}

#[allow(clippy::too_many_arguments)]
fn statistic<R: Rng + ?Sized>(
    kind: Statistic,
    h: &MaxAffineFunction,
    f: &MaxAffineFunction,
    eps: f64,
    mu: &ExplorationMeasure,
    sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    let x = mu.sample(rng)?;
    let fx = f.value(&x);
    let noise = if sigma > 0.0 { sigma * rng::gaussian_vector(rng, 1)[0] } else { 0.0 };
    let y = h.value(&x) + noise;
    let scale = eps.max(fx);
    Ok(match kind {
        Statistic::Absolute => (y - fx).abs() / scale,
        Statistic::Signed => (fx - y) / scale,
    })
}

/// `trials` calibration draws and `trials` draws under each hypothesis,
/// with the absolute statistic.
pub fn hypothesis_test<R: Rng + ?Sized>(
    f: &MaxAffineFunction,
    g: &MaxAffineFunction,
    eps: f64,
    mu: &ExplorationMeasure,
    noise_sigma: f64,
    trials: usize,
    rng: &mut R,
) -> Result<HypothesisReport> {
    hypothesis_test_with(Statistic::Absolute, f, g, eps, mu, noise_sigma, trials, rng)
}

#[allow(clippy::too_many_arguments)]
pub fn hypothesis_test_with<R: Rng + ?Sized>(
    kind: Statistic,
    f: &MaxAffineFunction,
    g: &MaxAffineFunction,
    eps: f64,
    mu: &ExplorationMeasure,
    noise_sigma: f64,
    trials: usize,
    rng: &mut R,
) -> Result<HypothesisReport> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise sigma must be ≥ 0, got {noise_sigma}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if trials < 20 {
        return Err(Error::InvalidArgument("need at least 20 trials".into()));
    }
    check_dim(mu.dimension, f.dimension)?;
    check_dim(mu.dimension, g.dimension)?;
    let mut calib: Vec<f64> = (0..trials)
        .map(|_| statistic(kind, f, f, eps, mu, noise_sigma, rng))
        .collect::<Result<_>>()?;
    calib.sort_by(f64::total_cmp);
    let k = ((1.0 - LEVEL) * trials as f64).ceil() as usize;
    let threshold = calib[k.min(trials) - 1];
    let null: Vec<f64> = (0..trials)
        .map(|_| statistic(kind, f, f, eps, mu, noise_sigma, rng))
        .collect::<Result<_>>()?;
    let alt: Vec<f64> = (0..trials)
        .map(|_| statistic(kind, g, f, eps, mu, noise_sigma, rng))
        .collect::<Result<_>>()?;
    let reject0 = null.iter().filter(|&&s| s > threshold).count() as u64;
    let reject1 = alt.iter().filter(|&&s| s > threshold).count() as u64;
    let m = trials as u64;
    let level_observed = reject0 as f64 / trials as f64;
    let power = reject1 as f64 / trials as f64;

    let lo = null.iter().chain(&alt).cloned().fold(f64::INFINITY, f64::min);
    let hi = null.iter().chain(&alt).cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(1e-300);
    let bin = |s: f64| (((s - lo) / width * TV_BINS as f64) as usize).min(TV_BINS - 1);
    let mut h0 = [0u64; TV_BINS];
    let mut h1 = [0u64; TV_BINS];
    null.iter().for_each(|&s| h0[bin(s)] += 1);
    alt.iter().for_each(|&s| h1[bin(s)] += 1);
    let tv_binned = 0.5
        * h0.iter()
            .zip(&h1)
            .map(|(a, b)| (*a as f64 - *b as f64).abs() / trials as f64)
            .sum::<f64>();

    Ok(HypothesisReport {
        statistic: kind,
        level: LEVEL,
        threshold,
        level_observed,
        power,
        power_ci: stats::wilson95(reject1, m),
        level_sigma: stats::binomial_sigma(LEVEL, m),
        tv_lower_estimate: (power - level_observed).max(0.0),
        tv_binned,
        trials,
        noise_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore1d::uniform_segment;
    use crate::rng::seeded;

    fn vee() -> MaxAffineFunction {
        MaxAffineFunction::from_pairs(&[(-0.5, &[1.0]), (0.5, &[-1.0])], 0.0).unwrap()
    }

    #[test]
    fn null_alternative_has_level_power() {
        let mut r = seeded(0);
        let mu = uniform_segment(0.0, 1.0);
        let rep = hypothesis_test(&vee(), &vee(), 0.25, &mu, 1.0, 10_000, &mut r).unwrap();
        assert!((rep.power - 0.05).abs() <= 4.0 * rep.level_sigma);
    }

    #[test]
    fn noiseless_separation_is_certain() {
        let mut r = seeded(1);
        let mu = uniform_segment(0.0, 1.0);
        let g = vee().shift(-1.0);
        let rep = hypothesis_test(&vee(), &g, 0.25, &mu, 0.0, 1000, &mut r).unwrap();
        assert_eq!(rep.power, 1.0);
        assert_eq!(rep.level_observed, 0.0);
    }

    /// g = f − 4ε under unit noise: the one-sided statistic separates the
    /// hypotheses by more than five binomial σ.
    #[test]
    fn signed_statistic_detects_unit_noise_shift() {
        let mut r = seeded(3);
        let mu = uniform_segment(0.0, 1.0);
        let eps = 0.0625;
        let g = vee().shift(-4.0 * eps);
        let rep = hypothesis_test_with(Statistic::Signed, &vee(), &g, eps, &mu, 1.0, 10_000, &mut r).unwrap();
        assert!(rep.power > LEVEL + 5.0 * rep.level_sigma, "{rep:?}");
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut r = seeded(2);
        let mu = uniform_segment(0.0, 1.0);
        assert!(hypothesis_test(&vee(), &vee(), 0.25, &mu, -1.0, 100, &mut r).is_err());
    }
}
