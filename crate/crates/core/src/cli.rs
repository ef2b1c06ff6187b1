//! Command implementations behind the `msexplore` binary.
//!
//! Every JSON output carries a [`RunMeta`] block and every CSV starts with a
//! `#` line holding the same fields. Nothing here reads the clock, so the
//! same arguments and inputs give byte-identical files.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bandit::{
    aggregate, hypothesis_test_with, loglog_slope, results_csv, run_seeds, Environment, GameParams, GameSummary,
    HypothesisReport, Policy, ScenarioFile, SeedAggregate, Statistic,
};
use crate::calibration::{calibrate, CalibrationSetup};
use crate::convexfn::MaxAffineFunction;
use crate::error::{Error, Result};
use crate::explore1d::{threshold_1d, verify_exploration, ExplorationMeasure, VerificationReport};
use crate::explore_nd::{build_exploratory_measure_traced, calibration_n2, BuildParams, ProfileName};
use crate::geometry::ConvexBody;
use crate::linalg::Vector;
use crate::rng;

pub const TOOL: &str = "msexplore";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "msexplore", version, about = "Exploratory measures and Bayesian bandit convex optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or check exploratory measures.
    #[command(subcommand)]
    Explore(ExploreCommand),
    /// Bayesian bandit games.
    #[command(subcommand)]
    Bandit(BanditCommand),
    /// Single-measurement hypothesis tests.
    #[command(subcommand)]
    Hypothesis(HypothesisCommand),
}

#[derive(Debug, Subcommand)]
pub enum ExploreCommand {
    Build(BuildArgs),
    Verify(VerifyArgs),
    /// Fit the two-dimensional constants and write the calibration file.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Subcommand)]
pub enum BanditCommand {
    Run(BanditArgs),
}

#[derive(Debug, Subcommand)]
pub enum HypothesisCommand {
    Test(HypothesisArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long = "fn")]
    pub function: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value = "calibrated")]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Multi-scale traces (n ≥ 2); defaults to <out>.trace.json.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long = "fn")]
    pub function: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub eps: f64,
    /// Witness point with g(α) < −ε, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    /// Defaults to 1/8 in one dimension and the calibration otherwise.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Defaults to 1/(8 ln(1 + 1/ε)) in one dimension and the calibration otherwise.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 101)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BanditArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long, default_value = "two_point")]
    pub policy: String,
    /// Inclusive range a..b, or a single seed.
    #[arg(long, default_value = "0..19")]
    pub seeds: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON; defaults to <out>.summary.json.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Rerun over these horizons (stationary scenarios only).
    #[arg(long = "sweep-T", value_delimiter = ',')]
    pub sweep_t: Option<Vec<usize>>,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long, default_value = "calibrated")]
    pub profile: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HypothesisArgs {
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long = "fn")]
    pub function: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// abs (two-sided) or signed (one-sided, h below f).
    #[arg(long, default_value = "abs")]
    pub statistic: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Provenance block embedded in every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub version: String,
    /// SHA-256 over the command, its arguments and the bytes of each input file.
    pub config_hash: String,
    pub seed: String,
    pub profile: String,
}

const PATH_FIELDS: &[&str] = &["out", "trace", "summary", "body", "function", "g", "measure", "scenarios"];

impl RunMeta {
    fn new<C: Serialize>(command: &str, config: &C, inputs: &[&Path], seed: String, profile: &str) -> Result<Self> {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        // Paths are left out: inputs enter through their bytes, and where the
        // outputs go is not part of the run.
        let mut v = serde_json::to_value(config)?;
        if let Some(obj) = v.as_object_mut() {
            for k in PATH_FIELDS {
                obj.remove(*k);
            }
        }
        h.update(serde_json::to_vec(&v)?);
        for p in inputs {
            h.update(fs::read(p)?);
        }
        let hash: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(RunMeta {
            tool: TOOL.into(),
            version: VERSION.into(),
            config_hash: hash,
            seed,
            profile: profile.into(),
        })
    }

    fn csv_comment(&self) -> String {
        format!(
            "# tool={} version={} config_hash={} seed={} profile={}\n",
            self.tool, self.version, self.config_hash, self.seed, self.profile
        )
    }
}

/// A measure file with its provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub meta: RunMeta,
    pub eps: f64,
    pub measure: ExplorationMeasure,
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", p.display())))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", p.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn load_body(p: &Path) -> Result<ConvexBody> {
    ConvexBody::from_json(&read_text(p)?)
}

pub fn load_function(p: &Path) -> Result<MaxAffineFunction> {
    MaxAffineFunction::from_json(&read_text(p)?)
}

/// Reads either a bare measure or a [`MeasureFile`].
pub fn load_measure(p: &Path) -> Result<ExplorationMeasure> {
    let text = read_text(p)?;
    if let Ok(f) = serde_json::from_str::<MeasureFile>(&text) {
        f.measure.validate()?;
        return Ok(f.measure);
    }
    ExplorationMeasure::from_json(&text)
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn parse_seeds(s: &str) -> Result<RangeInclusive<u64>> {
    let bad = || Error::InvalidArgument(format!("seeds must look like a..b or a single integer, got {s:?}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let a: u64 = a.parse().map_err(|_| bad())?;
    let b: u64 = b.parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok(a..=b)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Explore(ExploreCommand::Build(a)) => cmd_explore_build(&a),
        Command::Explore(ExploreCommand::Verify(a)) => cmd_explore_verify(&a).map(|_| ()),
        Command::Explore(ExploreCommand::Calibrate(a)) => cmd_explore_calibrate(&a),
        Command::Bandit(BanditCommand::Run(a)) => cmd_bandit_run(&a).map(|_| ()),
        Command::Hypothesis(HypothesisCommand::Test(a)) => cmd_hypothesis(&a).map(|_| ()),
    }
}

pub fn cmd_explore_build(a: &BuildArgs) -> Result<()> {
    check_eps(a.eps)?;
    let profile: ProfileName = a.profile.parse()?;
    let body = load_body(&a.body)?;
    let f = load_function(&a.function)?;
    let meta = RunMeta::new("explore build", a, &[&a.body, &a.function], a.seed.to_string(), &a.profile)?;
    let params = BuildParams::with_profile(profile);
    let mut r = rng::seeded(a.seed);
    let out = build_exploratory_measure_traced(&body, &f, a.eps, &params, &mut r).inspect_err(|e| {
        if !e.is_config() && profile == ProfileName::Paper && body.dimension >= 2 {
            log::error!("profile \"paper\" is not expected to work at this scale; try --profile calibrated");
        }
    })?;
    let file = MeasureFile {
        meta: meta.clone(),
        eps: a.eps,
        measure: out.measure,
    };
    write_text(&a.out, &to_json(&file)?)?;
    if !out.traces.is_empty() {
        #[derive(Serialize)]
        struct TraceFile<'a> {
            meta: &'a RunMeta,
            traces: &'a [crate::explore_nd::MultiScaleTrace],
        }
        let p = a.trace.clone().unwrap_or_else(|| with_suffix(&a.out, ".trace.json"));
        write_text(
            &p,
            &to_json(&TraceFile {
                meta: &meta,
                traces: &out.traces,
            })?,
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub meta: RunMeta,
    pub eps: f64,
    pub gap_constant: f64,
    #[serde(flatten)]
    pub report: VerificationReport,
    pub seed: u64,
    /// g(α) < −ε at the given witness, when one was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_ok: Option<bool>,
}

pub fn cmd_explore_verify(a: &VerifyArgs) -> Result<VerifyOutput> {
    check_eps(a.eps)?;
    let mu = load_measure(&a.measure)?;
    let f = load_function(&a.function)?;
    let g = load_function(&a.g)?;
    let n = mu.dimension;
    let (gap, threshold, profile) = if n == 1 {
        (a.gap.unwrap_or(0.125), a.threshold.unwrap_or_else(|| threshold_1d(a.eps)), "paper")
    } else {
        let c = calibration_n2()?;
        (
            a.gap.unwrap_or(c.c_gap),
            a.threshold.unwrap_or_else(|| c.threshold(n, a.eps)),
            "calibrated",
        )
    };
    let witness_ok = match &a.alpha {
        Some(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            let ok = g.value(&Vector::from_vec(v.clone())) < -a.eps;
            if !ok {
                log::warn!("g(alpha) ≥ -eps: the guarantee makes no claim for this g");
            }
            Some(ok)
        }
        None => None,
    };
    let meta = RunMeta::new(
        "explore verify",
        a,
        &[&a.measure, &a.function, &a.g],
        a.seed.to_string(),
        profile,
    )?;
    let mut r = rng::seeded(a.seed);
    let report = verify_exploration(&mu, &f, &g, a.eps, gap, threshold, a.samples, &mut r)?;
    let out = VerifyOutput {
        meta,
        eps: a.eps,
        gap_constant: gap,
        report,
        seed: a.seed,
        witness_ok,
    };
    write_text(&a.out, &to_json(&out)?)?;
    Ok(out)
}

pub fn cmd_explore_calibrate(a: &CalibrateArgs) -> Result<()> {
    let setup = CalibrationSetup {
        instances: a.instances,
        samples: a.samples,
        seed: a.seed,
        ..CalibrationSetup::default()
    };
    let cal = calibrate(&setup)?;
    write_text(&a.out, &to_json(&cal)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub horizon: usize,
    pub aggregate: SeedAggregate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BanditSummary {
    pub meta: RunMeta,
    pub policy: Policy,
    pub gap_constant: f64,
    pub games: Vec<GameSummary>,
    pub sweep: Vec<SweepPoint>,
    /// Least-squares slope of ln(mean regret against the body minimum) on
    /// ln T across the sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglog_slope: Option<f64>,
}

pub fn cmd_bandit_run(a: &BanditArgs) -> Result<BanditSummary> {
    let policy: Policy = a.policy.parse()?;
    let profile: ProfileName = a.profile.parse()?;
    let seeds: Vec<u64> = parse_seeds(&a.seeds)?.collect();
    let meta = RunMeta::new("bandit run", a, &[&a.scenarios], a.seeds.clone(), &a.profile)?;
    // The net check and loss validation draw from their own stream.
    let mut setup = rng::child(0, 0x5c);
    let env = ScenarioFile::load(&a.scenarios, &mut setup)?;
    let params = GameParams {
        gap_constant: a.gap,
        build: BuildParams::with_profile(profile),
        ..GameParams::default()
    };
    let gap = params.gap_for(env.body.dimension)?;
    let horizons = a.sweep_t.clone().unwrap_or_else(|| vec![env.horizon()]);
    let mut csv = meta.csv_comment();
    let mut games = Vec::new();
    let mut sweep = Vec::new();
    for &t in &horizons {
        let e: Environment = if t == env.horizon() { env.clone() } else { env.with_horizon(t, &mut setup)? };
        let results = run_seeds(&e, policy, &seeds, &params)?;
        let body = results_csv(&results);
        if sweep.is_empty() {
            csv.push_str(&body);
        } else {
            // One header for the whole file.
            csv.push_str(body.split_once('\n').map_or("", |x| x.1));
        }
        sweep.push(SweepPoint {
            horizon: t,
            aggregate: aggregate(&results)?,
        });
        games.extend(results.into_iter().map(|g| g.summary));
    }
    let slope = (a.sweep_t.is_some() && sweep.len() >= 2).then(|| {
        let pts: Vec<(usize, f64)> = sweep.iter().map(|p| (p.horizon, p.aggregate.mean_regret_body)).collect();
        loglog_slope(&pts)
    });
    let summary = BanditSummary {
        meta,
        policy,
        gap_constant: gap,
        games,
        sweep,
        loglog_slope: slope,
    };
    write_text(&a.out, &csv)?;
    let sp = a.summary.clone().unwrap_or_else(|| with_suffix(&a.out, ".summary.json"));
    write_text(&sp, &to_json(&summary)?)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisOutput {
    pub meta: RunMeta,
    pub eps: f64,
    #[serde(flatten)]
    pub report: HypothesisReport,
}

pub fn cmd_hypothesis(a: &HypothesisArgs) -> Result<HypothesisOutput> {
    check_eps(a.eps)?;
    let mu = load_measure(&a.measure)?;
    let f = load_function(&a.function)?;
    let g = load_function(&a.g)?;
    let profile = if mu.dimension == 1 { "paper" } else { "calibrated" };
    let meta = RunMeta::new(
        "hypothesis test",
        a,
        &[&a.measure, &a.function, &a.g],
        a.seed.to_string(),
        profile,
    )?;
    let mut r = rng::seeded(a.seed);
    let kind: Statistic = a.statistic.parse()?;
    let report = hypothesis_test_with(kind, &f, &g, a.eps, &mu, a.sigma, a.trials, &mut r)?;
    let out = HypothesisOutput {
        meta,
        eps: a.eps,
        report,
    };
    write_text(&a.out, &to_json(&out)?)?;
    Ok(out)
}

/// Caps the rayon pool from EXPLORER_THREADS when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("EXPLORER_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("EXPLORER_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidArgument("EXPLORER_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..19").unwrap(), 0..=19);
        assert_eq!(parse_seeds("3").unwrap(), 3..=3);
        assert_eq!(parse_seeds("2..=4").unwrap(), 2..=4);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let c = Cli::try_parse_from([
            "msexplore", "bandit", "run", "--scenarios", "s.json", "--out", "r.csv", "--sweep-T", "64,128",
        ])
        .unwrap();
        match c.command {
            Command::Bandit(BanditCommand::Run(a)) => assert_eq!(a.sweep_t, Some(vec![64, 128])),
            _ => panic!("wrong command"),
        }
    }
}
