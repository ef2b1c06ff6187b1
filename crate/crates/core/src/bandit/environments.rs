//! Ready-made environments: the two-scenario toy and random V-shaped
//! families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::Net;
use super::scenario::{Environment, Likelihood, Scenario, ScenarioSet};
use crate::convexfn::{MaxAffineFunction, Piece};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::linalg::{direction_net, vector, Vector};
use crate::rng;

/// Body [0, 1], net {0, 1}, equal prior on ℓ = x and ℓ = 1 − x.
pub fn toy_environment(horizon: usize) -> Result<Environment> {
    let body = ConvexBody::interval(0.0, 1.0)?;
    let up = MaxAffineFunction::from_pairs(&[(0.0, &[1.0])], 0.0)?;
    let down = MaxAffineFunction::from_pairs(&[(1.0, &[-1.0])], 0.0)?;
    let set = ScenarioSet::new(
        horizon,
        vec![
            Scenario {
                weight: 1.0,
                losses: vec![up],
            },
            Scenario {
                weight: 1.0,
                losses: vec![down],
            },
        ],
    )?;
    let mut r = rng::seeded(0);
    let net = Net::from_points(&body, vec![vector(&[0.0]), vector(&[1.0])], &mut r)?;
    Environment::new(body, net, set, Likelihood::default())
}

/// base + slope·|x − c| (a polyhedral norm with 16 facets in two dimensions).
pub fn vee(center: &Vector, base: f64, slope: f64) -> Result<MaxAffineFunction> {
    let n = center.len();
    let dirs = match n {
        1 => vec![vector(&[1.0]), vector(&[-1.0])],
        2 => direction_net(2, 16),
        _ => direction_net(n, 32),
    };
    let pieces = dirs
        .into_iter()
        .map(|u| {
            let y = u * slope;
            Piece {
                a: base - y.dot(center),
                y,
            }
        })
        .collect();
    MaxAffineFunction::new(pieces, 0.0)
}

/// Random family: scenario s has loss 0.25 + 0.5·|x − c_s| with
/// c_s = m + (width/√T)·u_s, u_s uniform in the unit ball, m the center of [0,1]^n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VeeFamily {
    pub dimension: usize,
    pub scenarios: usize,
    /// Spread of the centers in units of 1/√T; `None` spreads them over the
    /// whole body.
    pub width: Option<f64>,
    pub likelihood: Likelihood,
}

impl VeeFamily {
    /// The environment for horizon T; the u_s come from `seed` only, so all
    /// horizons share them.
    pub fn environment(&self, horizon: usize, seed: u64) -> Result<Environment> {
        let n = self.dimension;
        if n == 0 || n > 3 {
            return Err(Error::InvalidArgument(format!("dimension {n} not supported")));
        }
        if self.scenarios == 0 {
            return Err(Error::InvalidArgument("need at least one scenario".into()));
        }
        let body = ConvexBody::axis_box(&vec![0.0; n], &vec![1.0; n])?;
        let mid = Vector::from_element(n, 0.5);
        let mut r = rng::child(seed, 0xe0);
        let scale = match self.width {
            Some(w) => (w / (horizon as f64).sqrt()).min(0.5),
            None => 0.4,
        };
        let mut scenarios = Vec::with_capacity(self.scenarios);
        for _ in 0..self.scenarios {
            let u = rng::unit_ball(&mut r, n);
            let c = (&mid + u * scale).map(|v| v.clamp(0.0, 1.0));
            scenarios.push(Scenario {
                weight: 1.0,
                losses: vec![vee(&c, 0.25, 0.5 / (n as f64).sqrt().max(1.0))?],
            });
        }
        let set = ScenarioSet::new(horizon, scenarios)?;
        let mut nr = rng::child(seed, 0xe1);
        Environment::with_grid_net(body, set, self.likelihood, &mut nr)
    }
}

/// K scenarios with per-round random V-shaped losses: deterministic
/// feedback, losses vary over time so information arrives gradually.
pub fn random_sequence_environment<R: Rng + ?Sized>(
    scenarios: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<Environment> {
    let body = ConvexBody::interval(0.0, 1.0)?;
    let base: Vec<f64> = (0..scenarios).map(|_| rng::uniform(rng, 0.15, 0.85)).collect();
    let mut sc = Vec::with_capacity(scenarios);
    // Rounds share a common center with probability 1/2, in which case
    // every scenario yields the same loss and nothing is learned.
    let common: Vec<Option<f64>> = (0..horizon)
        .map(|_| if rng.random_bool(0.5) { Some(rng::uniform(rng, 0.0, 1.0)) } else { None })
        .collect();
    for &b in &base {
        let losses = common
            .iter()
            .map(|c| vee(&vector(&[c.unwrap_or(b)]), 0.2, 0.5))
            .collect::<Result<Vec<_>>>()?;
        sc.push(Scenario { weight: 1.0, losses });
    }
    let set = ScenarioSet::new(horizon, sc)?;
    Environment::with_grid_net(body, set, Likelihood::default(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_istar() {
        let env = toy_environment(8).unwrap();
        assert_eq!(env.istar, vec![0, 1]);
        assert_eq!(env.scenarios.prior, vec![0.5, 0.5]);
    }

    #[test]
    fn vee_family_shares_centers_across_horizons() {
        let fam = VeeFamily {
            dimension: 1,
            scenarios: 8,
            width: Some(2.0),
            likelihood: Likelihood::Gaussian { sigma: 0.1 },
        };
        let a = fam.environment(64, 3).unwrap();
        let b = fam.environment(256, 3).unwrap();
        let ca = a.scenarios.scenarios[0].losses[0].value(&vector(&[0.5]));
        let cb = b.scenarios.scenarios[0].losses[0].value(&vector(&[0.5]));
        // |0.5 − c| halves when T quadruples.
        assert!(((ca - 0.25) - 2.0 * (cb - 0.25)).abs() < 1e-12);
        let mut r = rng::seeded(0);
        a.scenarios.validate_on(&a.body, &mut r).unwrap();
    }

    #[test]
    fn sequence_environment_is_valid() {
        let mut r = rng::seeded(4);
        let env = random_sequence_environment(4, 32, &mut r).unwrap();
        env.scenarios.validate_on(&env.body, &mut r).unwrap();
        assert_eq!(env.scenarios.len(), 4);
    }
}
