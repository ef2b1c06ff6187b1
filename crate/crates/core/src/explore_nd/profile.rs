//! Named sets of values for the construction's constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::convexfn::EtaChoice;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Paper,
    Calibrated,
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileName::Paper => "paper",
            ProfileName::Calibrated => "calibrated",
        })
    }
}

impl FromStr for ProfileName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ProfileName::Paper),
            "calibrated" => Ok(ProfileName::Calibrated),
            other => Err(Error::InvalidArgument(format!(
                "unknown profile {other:?} (expected paper or calibrated)"
            ))),
        }
    }
}

/// Constants used by one single-scale step in dimension n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConstants {
    pub profile: ProfileName,
    pub xi: f64,
    pub r: f64,
    pub gamma: f64,
    pub eta: EtaChoice,
    /// Level Mγ defining the no-good-direction polytope (M = 2n).
    pub level: f64,
    /// Slab half-width 2Mγ.
    pub slab_half_width: f64,
}

impl StageConstants {
    pub fn new(profile: ProfileName, n: usize, eps: f64) -> Self {
        let nf = n as f64;
        let gamma = 1.0 / (16.0 * nf);
        let level = 2.0 * nf * gamma;
        let (xi, r, eta) = match profile {
            ProfileName::Paper => (
                1.0 / (16.0 * nf * nf),
                1.0 / (2f64.powi(13) * nf * nf),
                EtaChoice::paper_default(eps, n),
            ),
            ProfileName::Calibrated => (0.25, 1.0 / (8.0 * nf * nf), EtaChoice::fixed(1e-6)),
        };
        StageConstants {
            profile,
            xi,
            r,
            gamma,
            eta,
            level,
            slab_half_width: 2.0 * level,
        }
    }

    /// Smoothing radius. Paper: 1/(2²⁸n⁶ ln(1 + Ln/η)); calibrated: an eighth
    /// of the placement-ball radius.
    pub fn delta(&self, n: usize, lipschitz: f64, ball_radius: f64) -> f64 {
        match self.profile {
            ProfileName::Paper => {
                let nf = n as f64;
                1.0 / (2f64.powi(28) * nf.powi(6) * (1.0 + lipschitz.max(1.0) * nf / self.eta.used).ln())
            }
            ProfileName::Calibrated => ball_radius / 8.0,
        }
    }
}

/// Half-width of the centered slab that ends the multi-scale iteration.
/// Paper: c′ε/(16n¹⁰) with c′ = 1; calibrated: ε/(8n).
pub fn delta_stop(profile: ProfileName, n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    match profile {
        ProfileName::Paper => eps / (16.0 * nf.powi(10)),
        ProfileName::Calibrated => eps / (8.0 * nf),
    }
}

/// Default cap on multi-scale stages: 8n(1 + ln(1 + n/ε)).
pub fn iteration_cap(n: usize, eps: f64) -> usize {
    let nf = n as f64;
    (8.0 * nf * (1.0 + (1.0 + nf / eps).ln())).floor() as usize
}

/// Empirical constants for the guarantee in n = 2: gap c_gap·max(ε, f(x)) and
/// threshold c_prob/(n³ ln(1 + n/ε)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub dimension: usize,
    pub profile: ProfileName,
    pub c_gap: f64,
    pub c_prob: f64,
    pub instances: usize,
    pub samples_per_instance: usize,
    pub seed: u64,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub candidates: Vec<CandidateRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub c_gap: f64,
    /// min over instances of ci_low·n³·ln(1 + n/ε).
    pub min_scaled_ci_low: f64,
    pub c_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub instances: usize,
    pub seed: u64,
    pub samples: usize,
    pub passed: usize,
    pub pass_rate: f64,
    /// Indices of failing instances (construction failures included).
    pub failures: Vec<usize>,
}

impl Calibration {
    pub fn gap(&self, eps: f64, fx: f64) -> f64 {
        self.c_gap * eps.max(fx)
    }

    pub fn threshold(&self, n: usize, eps: f64) -> f64 {
        let nf = n as f64;
        self.c_prob / (nf.powi(3) * (1.0 + nf / eps).ln())
    }
}

const CALIBRATION_N2: &str = include_str!("../../data/calibration_n2.json");

/// Calibration shipped with the crate.
pub fn calibration_n2() -> Result<Calibration> {
    Ok(serde_json::from_str(CALIBRATION_N2)?)
}
