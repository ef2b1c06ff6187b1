//! Posterior over scenarios and its pushforward onto net indices.

use serde::{Deserialize, Serialize};

use super::scenario::{Environment, Likelihood};
use crate::error::{Error, Result};
use crate::linalg::{serde_vectors, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub alpha_scenarios: Vec<f64>,
    /// α_t over net indices, pushed through i*.
    pub alpha: Vec<f64>,
    /// Number of observations absorbed so far.
    pub t: usize,
    #[serde(with = "serde_vectors")]
    pub history_x: Vec<Vector>,
    pub history_y: Vec<f64>,
}

pub fn push_alpha(alpha_scenarios: &[f64], istar: &[usize], k: usize) -> Vec<f64> {
    let mut a = vec![0.0; k];
    for (w, &i) in alpha_scenarios.iter().zip(istar) {
        a[i] += w;
    }
    a
}

impl PosteriorState {
    pub fn prior(env: &Environment) -> Self {
        let alpha_scenarios = env.scenarios.prior.clone();
        let alpha = push_alpha(&alpha_scenarios, &env.istar, env.net.len());
        PosteriorState {
            alpha_scenarios,
            alpha,
            t: 0,
            history_x: Vec::new(),
            history_y: Vec::new(),
        }
    }

    /// Total variation distance between scenario posteriors.
    pub fn tv_to(&self, other: &[f64]) -> f64 {
        0.5 * self
            .alpha_scenarios
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn support_size(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }
}

/// Bayes update after observing y at x in round `t` (0-based).
pub fn posterior_update(
    state: &PosteriorState,
    env: &Environment,
    t: usize,
    x: &Vector,
    y: f64,
) -> Result<PosteriorState> {
    let mut next = state.clone();
    next.absorb(env, t, x, y)?;
    Ok(next)
}

impl PosteriorState {
    /// In-place form of [`posterior_update`]; the state is unchanged on error.
    pub fn absorb(&mut self, env: &Environment, t: usize, x: &Vector, y: f64) -> Result<()> {
        let sc = &env.scenarios;
        let mut w: Vec<f64> = match env.likelihood {
            Likelihood::Deterministic { tol } => (0..sc.len())
                .map(|s| {
                    if (sc.loss(s, t).value(x) - y).abs() > tol {
                        0.0
                    } else {
                        self.alpha_scenarios[s]
                    }
                })
                .collect(),
            Likelihood::Gaussian { sigma } => {
                // Shifting log-weights by their maximum keeps long histories stable.
                let logs: Vec<f64> = (0..sc.len())
                    .map(|s| {
                        let a = self.alpha_scenarios[s];
                        if a > 0.0 {
                            let d = y - sc.loss(s, t).value(x);
                            a.ln() - d * d / (2.0 * sigma * sigma)
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                logs.iter().map(|l| if m.is_finite() { (l - m).exp() } else { 0.0 }).collect()
            }
        };
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InconsistentObservation { t });
        }
        for v in &mut w {
            *v /= total;
        }
        self.alpha = push_alpha(&w, &env.istar, env.net.len());
        self.alpha_scenarios = w;
        self.history_x.push(x.clone());
        self.history_y.push(y);
        self.t += 1;
        Ok(())
    }
}
