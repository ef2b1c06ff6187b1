//! Finite Bayesian environments: a prior over complete loss sequences.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{build_net, Net};
use crate::convexfn::MaxAffineFunction;
use crate::error::{Error, Result};
use crate::geometry::{sample_many, ConvexBody, HitAndRunParams};
use crate::linalg::Vector;

/// One loss sequence. A single loss means the same function every round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub weight: f64,
    pub losses: Vec<MaxAffineFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub dimension: usize,
    pub horizon: usize,
    pub scenarios: Vec<Scenario>,
    /// Normalized weights.
    pub prior: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(horizon: usize, scenarios: Vec<Scenario>) -> Result<Self> {
        let Some(first) = scenarios.first() else {
            return Err(Error::InvalidArgument("no scenarios".into()));
        };
        let Some(l0) = first.losses.first() else {
            return Err(Error::InvalidArgument("scenario without losses".into()));
        };
        let n = l0.dimension;
        for (s, sc) in scenarios.iter().enumerate() {
            if !(sc.weight >= 0.0 && sc.weight.is_finite()) {
                return Err(Error::InvalidArgument(format!("scenario {s} has weight {}", sc.weight)));
            }
            if sc.losses.len() != 1 && sc.losses.len() != horizon {
                return Err(Error::InvalidArgument(format!(
                    "scenario {s} has {} losses; expected 1 or T = {horizon}",
                    sc.losses.len()
                )));
            }
            for l in &sc.losses {
                if l.dimension != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: l.dimension,
                    });
                }
                l.validate()?;
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("prior weights sum to zero".into()));
        }
        let prior = scenarios.iter().map(|s| s.weight / total).collect();
        Ok(ScenarioSet {
            dimension: n,
            horizon,
            scenarios,
            prior,
        })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// ℓ_t^{(s)} for the 0-based round t.
    pub fn loss(&self, s: usize, t: usize) -> &MaxAffineFunction {
        let ls = &self.scenarios[s].losses;
        if ls.len() == 1 {
            &ls[0]
        } else {
            &ls[t]
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.scenarios.iter().all(|s| s.losses.len() == 1)
    }

    /// Loss values in [0, 1] on sampled points and Lipschitz bound ≤ 1.
    pub fn validate_on<R: Rng + ?Sized>(&self, body: &ConvexBody, rng: &mut R) -> Result<()> {
        if body.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: body.dimension,
            });
        }
        let xs = sample_many(body, 200, rng, HitAndRunParams::default())?;
        for (s, sc) in self.scenarios.iter().enumerate() {
            for (t, l) in sc.losses.iter().enumerate() {
                let lip = l.lipschitz_bound(body);
                if lip > 1.0 + 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "loss {t} of scenario {s} has Lipschitz bound {lip} > 1"
                    )));
                }
                for x in &xs {
                    let v = l.value(x);
                    if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                        return Err(Error::InvalidArgument(format!(
                            "loss {t} of scenario {s} takes value {v} outside [0, 1] at {:?}",
                            x.as_slice()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Σ_t ℓ_t^{(s)}(x) over the whole horizon.
    pub fn total_loss(&self, s: usize, x: &Vector) -> f64 {
        let ls = &self.scenarios[s].losses;
        if ls.len() == 1 {
            self.horizon as f64 * ls[0].value(x)
        } else {
            ls.iter().map(|l| l.value(x)).sum()
        }
    }

    /// i*(s) = argmin_i Σ_t ℓ_t^{(s)}(x̄_i), ties to the lowest index.
    pub fn istar(&self, net: &Net) -> Vec<usize> {
        (0..self.len())
            .map(|s| {
                let mut best = 0;
                let mut bv = f64::INFINITY;
                for (i, p) in net.points.iter().enumerate() {
                    let v = self.total_loss(s, p);
                    if v < bv {
                        bv = v;
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// How observations update the posterior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Likelihood {
    /// Exact feedback: scenarios farther than `tol` from y are ruled out.
    Deterministic { tol: f64 },
    /// y = ℓ(x) + N(0, σ²).
    Gaussian { sigma: f64 },
}

impl Default for Likelihood {
    fn default() -> Self {
        Likelihood::Deterministic { tol: 1e-9 }
    }
}

impl Likelihood {
    pub fn noise_sigma(&self) -> f64 {
        match self {
            Likelihood::Deterministic { .. } => 0.0,
            Likelihood::Gaussian { sigma } => *sigma,
        }
    }
}

/// Body, net, scenarios and the derived i* map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub body: ConvexBody,
    pub net: Net,
    pub scenarios: ScenarioSet,
    pub istar: Vec<usize>,
    pub likelihood: Likelihood,
}

impl Environment {
    pub fn new(body: ConvexBody, net: Net, scenarios: ScenarioSet, likelihood: Likelihood) -> Result<Self> {
        if net.dimension() != body.dimension || scenarios.dimension != body.dimension {
            return Err(Error::DimensionMismatch {
                expected: body.dimension,
                found: scenarios.dimension,
            });
        }
        if let Likelihood::Gaussian { sigma } = likelihood {
            if !(sigma > 0.0) {
                return Err(Error::InvalidArgument(format!("noise sigma must be positive, got {sigma}")));
            }
        }
        let istar = scenarios.istar(&net);
        Ok(Environment {
            body,
            net,
            scenarios,
            istar,
            likelihood,
        })
    }

    /// Net built with the 1/√T rule.
    pub fn with_grid_net<R: Rng + ?Sized>(
        body: ConvexBody,
        scenarios: ScenarioSet,
        likelihood: Likelihood,
        rng: &mut R,
    ) -> Result<Self> {
        let net = build_net(&body, scenarios.horizon, rng)?;
        Environment::new(body, net, scenarios, likelihood)
    }

    pub fn horizon(&self) -> usize {
        self.scenarios.horizon
    }

    /// Same environment over a different horizon (stationary scenarios only);
    /// the net is rebuilt for the new T.
    pub fn with_horizon<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Result<Self> {
        if !self.scenarios.is_stationary() {
            return Err(Error::InvalidArgument("only stationary scenarios can change horizon".into()));
        }
        let mut sc = self.scenarios.clone();
        sc.horizon = horizon;
        Environment::with_grid_net(self.body.clone(), sc, self.likelihood, rng)
    }
}

/// A loss given inline or as a path to a function file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossEntry {
    Ref {
        #[serde(rename = "ref")]
        path: String,
    },
    Inline(MaxAffineFunction),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub weight: f64,
    pub losses: Vec<LossEntry>,
}

/// On-disk scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default = "default_rule")]
    pub net_spacing_rule: String,
    /// Net points when the rule is "explicit".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<Vec<Vec<f64>>>,
    /// Defaults to [0, 1] for one-dimensional losses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<ConvexBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood: Option<Likelihood>,
    pub scenarios: Vec<ScenarioEntry>,
}

fn default_rule() -> String {
    "inv_sqrt_T".into()
}

impl ScenarioFile {
    /// Resolves references relative to `base_dir` and builds the environment.
    pub fn into_environment<R: Rng + ?Sized>(self, base_dir: &Path, rng: &mut R) -> Result<Environment> {
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for e in self.scenarios {
            let mut losses = Vec::with_capacity(e.losses.len());
            for l in e.losses {
                losses.push(match l {
                    LossEntry::Inline(f) => f,
                    LossEntry::Ref { path } => {
                        let p = base_dir.join(path);
                        MaxAffineFunction::from_json(&std::fs::read_to_string(p)?)?
                    }
                });
            }
            scenarios.push(Scenario {
                weight: e.weight,
                losses,
            });
        }
        let set = ScenarioSet::new(self.horizon, scenarios)?;
        let body = match self.body {
            Some(b) => b,
            None if set.dimension == 1 => ConvexBody::interval(0.0, 1.0)?,
            None => return Err(Error::InvalidArgument("a body is required for n ≥ 2".into())),
        };
        set.validate_on(&body, rng)?;
        let likelihood = self.likelihood.unwrap_or_default();
        match self.net_spacing_rule.as_str() {
            "inv_sqrt_T" => Environment::with_grid_net(body, set, likelihood, rng),
            "explicit" => {
                let pts = self
                    .net
                    .ok_or_else(|| Error::InvalidArgument("explicit net rule needs a \"net\" list".into()))?;
                let net = Net::from_points(&body, pts.into_iter().map(Vector::from_vec).collect(), rng)?;
                Environment::new(body, net, set, likelihood)
            }
            other => Err(Error::InvalidArgument(format!("unknown net_spacing_rule {other:?}"))),
        }
    }

    pub fn load<R: Rng + ?Sized>(path: &Path, rng: &mut R) -> Result<Environment> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        file.into_environment(dir, rng)
    }
}
