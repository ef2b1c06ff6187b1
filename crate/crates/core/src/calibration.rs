//! Fitting the empirical constants of the two-dimensional guarantee and
//! checking them on fresh instances.
//!
//! For each candidate c_gap the calibration corpus gives, per instance, the
//! lower confidence bound of μ(|f − g| > c_gap·max(ε, f)). Scaling that by
//! n³ ln(1 + n/ε) and taking half the minimum over instances gives c_prob.
//! The candidate with the largest c_gap·c_prob is kept.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::explore1d::{event_probability, verify_exploration, GapRule};
use crate::explore_nd::{build_exploratory_measure, BuildParams, Calibration, CandidateRow, Validation};
use crate::instances::{corpus, Instance};
use crate::rng;

pub const GAP_CANDIDATES: [f64; 6] = [0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetup {
    pub dimension: usize,
    pub instances: usize,
    pub eps_values: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// c_prob is this fraction of the smallest scaled lower bound.
    pub safety: f64,
    pub validation_instances: usize,
    pub validation_seed: u64,
    pub build: BuildParams,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        CalibrationSetup {
            dimension: 2,
            instances: 20,
            eps_values: vec![0.25, 0.1, 0.03],
            samples: 20_000,
            seed: 101,
            safety: 0.5,
            validation_instances: 50,
            validation_seed: 202,
            build: BuildParams::default(),
        }
    }
}

fn scale(n: usize, eps: f64) -> f64 {
    let nf = n as f64;
    nf.powi(3) * (1.0 + nf / eps).ln()
}

/// Lower confidence bounds, one row per instance and one column per candidate.
fn lower_bounds(inst: &Instance, idx: usize, setup: &CalibrationSetup) -> Result<Vec<f64>> {
    let mut r = rng::child(setup.seed ^ 0xca1, idx as u64);
    let mu = build_exploratory_measure(&inst.body, &inst.f, inst.eps, &setup.build, &mut r)?;
    GAP_CANDIDATES
        .iter()
        .map(|&c| {
            let rule = GapRule::Relative(c);
            let est = event_probability(
                &mu,
                |x| rule.separated(inst.f.value(x), inst.g.value(x), inst.eps),
                setup.samples,
                &mut r,
            )?;
            Ok(est.ci_low)
        })
        .collect()
}

/// Fits c_gap and c_prob, then validates them on fresh instances.
pub fn calibrate(setup: &CalibrationSetup) -> Result<Calibration> {
    let n = setup.dimension;
    let insts = corpus(n, setup.instances, &setup.eps_values, setup.seed)?;
    let table: Vec<Vec<f64>> = insts
        .par_iter()
        .enumerate()
        .map(|(i, inst)| lower_bounds(inst, i, setup))
        .collect::<Result<_>>()?;
    let rows: Vec<CandidateRow> = GAP_CANDIDATES
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let m = insts
                .iter()
                .zip(&table)
                .map(|(inst, lb)| lb[k] * scale(n, inst.eps))
                .fold(f64::INFINITY, f64::min);
            CandidateRow {
                c_gap: c,
                min_scaled_ci_low: m,
                c_prob: setup.safety * m,
            }
        })
        .collect();
    let best = rows
        .iter()
        .max_by(|a, b| (a.c_gap * a.c_prob).total_cmp(&(b.c_gap * b.c_prob)))
        .expect("candidates are nonempty");
    log::info!("calibration: c_gap {} c_prob {:.4}", best.c_gap, best.c_prob);
    let mut cal = Calibration {
        dimension: n,
        profile: setup.build.profile,
        c_gap: best.c_gap,
        c_prob: best.c_prob,
        instances: setup.instances,
        samples_per_instance: setup.samples,
        seed: setup.seed,
        notes: format!(
            "c_prob = {} x min over instances of ci_low * n^3 * ln(1 + n/eps); eps in {:?}",
            setup.safety, setup.eps_values
        ),
        candidates: rows,
        validation: None,
    };
    cal.validation = Some(validate(&cal, setup)?);
    Ok(cal)
}

/// Pass rate of the constants on `validation_instances` fresh instances.
pub fn validate(cal: &Calibration, setup: &CalibrationSetup) -> Result<Validation> {
    let n = cal.dimension;
    let insts = corpus(n, setup.validation_instances, &setup.eps_values, setup.validation_seed)?;
    let passes: Vec<bool> = insts
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let mut r = rng::child(setup.validation_seed ^ 0xca1, i as u64);
            let mu = match build_exploratory_measure(&inst.body, &inst.f, inst.eps, &setup.build, &mut r) {
                Ok(m) => m,
                Err(e) if e.is_config() => return Err(e),
                Err(e) => {
                    log::warn!("validation instance {i}: {e}");
                    return Ok(false);
                }
            };
            let rep = verify_exploration(
                &mu,
                &inst.f,
                &inst.g,
                inst.eps,
                cal.c_gap,
                cal.threshold(n, inst.eps),
                setup.samples,
                &mut r,
            )?;
            Ok(rep.pass)
        })
        .collect::<Result<_>>()?;
    let passed = passes.iter().filter(|&&p| p).count();
    Ok(Validation {
        instances: insts.len(),
        seed: setup.validation_seed,
        samples: setup.samples,
        passed,
        pass_rate: passed as f64 / insts.len().max(1) as f64,
        failures: (0..passes.len()).filter(|&i| !passes[i]).collect(),
    })
}
