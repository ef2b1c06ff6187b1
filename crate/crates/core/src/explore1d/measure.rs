use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{AffineMap, ConvexBody};
use crate::linalg::{serde_matrix, serde_vector, Matrix, Vector};
use crate::rng;
use crate::stats;

/// Attempts at drawing a base point with a nonempty fiber.
pub const FIBER_BUDGET: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Component {
    Atom {
        #[serde(with = "serde_vector")]
        point: Vector,
    },
    Segment {
        #[serde(with = "serde_vector")]
        a: Vector,
        #[serde(with = "serde_vector")]
        b: Vector,
    },
    Ball {
        #[serde(with = "serde_vector")]
        center: Vector,
        radius: f64,
    },
    Pushforward {
        map: AffineMap,
        inner: Box<ExplorationMeasure>,
    },
    /// Draw u from `base`, then uniformly from the chord
    /// {origin + isometry·u + s·direction : s ∈ R} ∩ host.
    FiberLift {
        base: Box<ExplorationMeasure>,
        #[serde(with = "serde_matrix")]
        isometry: Matrix,
        #[serde(with = "serde_vector")]
        origin: Vector,
        #[serde(with = "serde_vector")]
        direction: Vector,
        host: ConvexBody,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedComponent {
    pub weight: f64,
    #[serde(flatten)]
    pub component: Component,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationMeasure {
    pub dimension: usize,
    pub components: Vec<WeightedComponent>,
}

/// Monte-Carlo estimate of μ(A) with atoms integrated exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    /// Total atom weight and the part of it inside the event.
    pub atom_mass: f64,
    pub atom_hits: f64,
}

impl Component {
    fn dimension(&self) -> usize {
        match self {
            Component::Atom { point } => point.len(),
            Component::Segment { a, .. } => a.len(),
            Component::Ball { center, .. } => center.len(),
            Component::Pushforward { map, .. } => map.matrix.nrows(),
            Component::FiberLift { direction, .. } => direction.len(),
        }
    }

    fn continuous_mass(&self) -> f64 {
        match self {
            Component::Atom { .. } => 0.0,
            Component::Pushforward { inner, .. } => inner.continuous_mass(),
            _ => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dimension();
        match self {
            Component::Atom { .. } => {}
            Component::Segment { b, .. } => check_dim(n, b.len())?,
            Component::Ball { radius, .. } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidArgument("ball radius must be positive".into()));
                }
            }
            Component::Pushforward { map, inner } => {
                check_dim(n, map.matrix.ncols())?;
                check_dim(n, map.offset.len())?;
                check_dim(n, inner.dimension)?;
                inner.validate()?;
            }
            Component::FiberLift {
                base,
                isometry,
                origin,
                direction,
                host,
            } => {
                check_dim(n, isometry.nrows())?;
                check_dim(n - 1, isometry.ncols())?;
                check_dim(n - 1, base.dimension)?;
                check_dim(n, origin.len())?;
                check_dim(n, host.dimension)?;
                if (direction.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument("fiber direction must be a unit vector".into()));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        match self {
            Component::Atom { point } => Ok(point.clone()),
            Component::Segment { a, b } => {
                let t: f64 = rng.random();
                Ok(a + (b - a) * t)
            }
            Component::Ball { center, radius } => Ok(center + rng::unit_ball(rng, center.len()) * *radius),
            Component::Pushforward { map, inner } => Ok(map.apply(&inner.sample(rng)?)),
            Component::FiberLift {
                base,
                isometry,
                origin,
                direction,
                host,
            } => {
                for _ in 0..FIBER_BUDGET {
                    let u = base.sample(rng)?;
                    let p = origin + isometry * u;
                    if let Some((lo, hi)) = host.chord(&p, direction) {
                        if hi - lo > 1e-14 {
                            let s = rng::uniform(rng, lo, hi);
                            return Ok(p + direction * s);
                        }
                    }
                }
                Err(Error::EmptyFiber(format!(
                    "no base point with a nonempty fiber in {FIBER_BUDGET} draws"
                )))
            }
        }
    }

    fn sample_continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        match self {
            Component::Pushforward { map, inner } => Ok(map.apply(&inner.sample_continuous(rng)?)),
            other => other.sample(rng),
        }
    }

    fn collect_atoms(&self, weight: f64, out: &mut Vec<(f64, Vector)>) {
        match self {
            Component::Atom { point } => out.push((weight, point.clone())),
            Component::Pushforward { map, inner } => {
                let mut sub = Vec::new();
                inner.collect_atoms(weight, &mut sub);
                out.extend(sub.into_iter().map(|(w, p)| (w, map.apply(&p))));
            }
            _ => {}
        }
    }
}

impl ExplorationMeasure {
    pub fn new(dimension: usize, components: Vec<WeightedComponent>) -> Result<Self> {
        let m = ExplorationMeasure {
            dimension,
            components,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn atom(point: Vector) -> Self {
        ExplorationMeasure {
            dimension: point.len(),
            components: vec![WeightedComponent {
                weight: 1.0,
                component: Component::Atom { point },
            }],
        }
    }

    /// Weighted mixture of measures, each wrapped as an identity pushforward.
    pub fn mixture(parts: Vec<(f64, ExplorationMeasure)>) -> Result<Self> {
        let n = parts
            .first()
            .map(|p| p.1.dimension)
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let components = parts
            .into_iter()
            .map(|(w, m)| WeightedComponent {
                weight: w,
                component: Component::Pushforward {
                    map: AffineMap::identity(n),
                    inner: Box::new(m),
                },
            })
            .collect();
        Self::new(n, components)
    }

    pub fn pushforward(&self, map: AffineMap) -> ExplorationMeasure {
        ExplorationMeasure {
            dimension: self.dimension,
            components: vec![WeightedComponent {
                weight: 1.0,
                component: Component::Pushforward {
                    map,
                    inner: Box::new(self.clone()),
                },
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidArgument("measure has no components".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if !(c.weight >= 0.0) {
                return Err(Error::InvalidArgument("negative component weight".into()));
            }
            total += c.weight;
            check_dim(self.dimension, c.component.dimension())?;
            c.component.validate()?;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Draw a component index by weight, then a point from it.
    pub fn sample_with_component<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, Vector)> {
        let k = rng::categorical(rng, &self.weights());
        Ok((k, self.components[k].component.sample(rng)?))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        Ok(self.sample_with_component(rng)?.1)
    }

    /// Mass not carried by atoms.
    pub fn continuous_mass(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.component.continuous_mass())
            .sum()
    }

    /// Draw from the measure conditioned on its non-atomic part.
    pub fn sample_continuous<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        let w: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight * c.component.continuous_mass())
            .collect();
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("measure is purely atomic".into()));
        }
        let k = rng::categorical(rng, &w);
        self.components[k].component.sample_continuous(rng)
    }

    /// All atoms with their absolute weights.
    pub fn atoms(&self) -> Vec<(f64, Vector)> {
        let mut out = Vec::new();
        self.collect_atoms(1.0, &mut out);
        out
    }

    fn collect_atoms(&self, scale: f64, out: &mut Vec<(f64, Vector)>) {
        for c in &self.components {
            c.component.collect_atoms(scale * c.weight, out);
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ExplorationMeasure = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("measure serializes")
    }
}

/// μ(A) for A = {x : predicate(x)}: atoms are summed exactly and the
/// continuous part is estimated from m draws with a Wilson interval.
pub fn event_probability<R: Rng + ?Sized>(
    mu: &ExplorationMeasure,
    predicate: impl Fn(&Vector) -> bool,
    m: usize,
    rng: &mut R,
) -> Result<EventEstimate> {
    if m < 1000 {
        return Err(Error::InvalidArgument(format!("event estimation needs m ≥ 1000, got {m}")));
    }
    let atoms = mu.atoms();
    let atom_mass: f64 = atoms.iter().map(|a| a.0).sum();
    let atom_hits: f64 = atoms.iter().filter(|a| predicate(&a.1)).map(|a| a.0).sum();
    // Weights sum to one, so this is the continuous mass without the
    // rounding of summing the non-atomic weights.
    let c = (1.0 - atom_mass).max(0.0);
    if c <= 1e-15 {
        return Ok(EventEstimate {
            p_hat: atom_hits,
            ci_low: atom_hits,
            ci_high: atom_hits,
            samples: 0,
            atom_mass,
            atom_hits,
        });
    }
    let mut hits = 0u64;
    for _ in 0..m {
        if predicate(&mu.sample_continuous(rng)?) {
            hits += 1;
        }
    }
    let (lo, hi) = stats::wilson95(hits, m as u64);
    let frac = hits as f64 / m as f64;
    Ok(EventEstimate {
        p_hat: (atom_hits + c * frac).min(1.0),
        ci_low: (atom_hits + c * lo).min(1.0),
        ci_high: (atom_hits + c * hi).min(1.0),
        samples: m,
        atom_mass,
        atom_hits,
    })
}
