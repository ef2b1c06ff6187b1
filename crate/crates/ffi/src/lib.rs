//! C interface to msexplore.
//!
//! Objects are opaque handles created from JSON and released with the
//! matching `_free` function. Fallible calls return an [`MsxStatus`]; on
//! failure `msx_last_error` gives a message for the calling thread.
//! Randomized calls take an explicit seed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use msexplore::bandit::{run_game, Environment, GameParams, Policy, ScenarioFile};
use msexplore::convexfn::MaxAffineFunction;
use msexplore::explore1d::{verify_exploration, ExplorationMeasure};
use msexplore::explore_nd::{build_exploratory_measure, BuildParams, ProfileName};
use msexplore::geometry::ConvexBody;
use msexplore::linalg::Vector;
use msexplore::rng;
use msexplore::Error;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad input: malformed JSON, wrong dimension, out-of-range parameter.
    Config = 3,
    /// A construction started and failed.
    Construction = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsxProfile {
    Calibrated = 0,
    Paper = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsxPolicy {
    TwoPoint = 0,
    Thompson = 1,
    Uniform = 2,
}

/// Outcome of an exploration check.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MsxReport {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub threshold: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Per-game totals of a bandit run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct MsxGameStats {
    pub horizon: usize,
    pub net_size: usize,
    pub true_scenario: usize,
    pub sum_v: f64,
    pub half_entropy: f64,
    pub regret: f64,
    pub regret_body: f64,
    pub step3_rounds: usize,
    pub fallback_rounds: usize,
}

pub struct MsxBody(ConvexBody);
pub struct MsxFunction(MaxAffineFunction);
pub struct MsxMeasure(ExplorationMeasure);
pub struct MsxEnvironment(Environment);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Fail {
    Status(MsxStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res<()>) -> MsxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MsxStatus::Ok
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            if e.is_config() {
                MsxStatus::Config
            } else {
                MsxStatus::Construction
            }
        }
        Err(_) => {
            set_error("internal panic");
            MsxStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(MsxStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Status(MsxStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn point(x: *const f64, n: usize, dim: usize) -> Res<Vector> {
    if x.is_null() {
        return Err(null("point"));
    }
    if n != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: n,
        }
        .into());
    }
    Ok(Vector::from_column_slice(std::slice::from_raw_parts(x, n)))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Res<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn msx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn msx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn msx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `json` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_body_from_json(json: *const c_char, out: *mut *mut MsxBody) -> MsxStatus {
    guard(|| put(out, MsxBody(ConvexBody::from_json(as_str(json, "json")?)?)))
}

/// # Safety
/// `body` is a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn msx_body_dimension(body: *const MsxBody) -> usize {
    body.as_ref().map_or(0, |b| b.0.dimension)
}

/// # Safety
/// `x` points to `n` doubles and `inside` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_body_contains(
    body: *const MsxBody,
    x: *const f64,
    n: usize,
    inside: *mut bool,
) -> MsxStatus {
    guard(|| {
        let b = as_ref(body, "body")?;
        let p = point(x, n, b.0.dimension)?;
        if inside.is_null() {
            return Err(null("inside"));
        }
        *inside = b.0.contains(&p)?;
        Ok(())
    })
}

/// # Safety
/// `body` comes from `msx_body_from_json` or is null.
#[no_mangle]
pub unsafe extern "C" fn msx_body_free(body: *mut MsxBody) {
    free(body)
}

/// # Safety
/// `json` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_function_from_json(json: *const c_char, out: *mut *mut MsxFunction) -> MsxStatus {
    guard(|| put(out, MsxFunction(MaxAffineFunction::from_json(as_str(json, "json")?)?)))
}

/// # Safety
/// `x` points to `n` doubles and `value` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_function_value(
    f: *const MsxFunction,
    x: *const f64,
    n: usize,
    value: *mut f64,
) -> MsxStatus {
    guard(|| {
        let f = as_ref(f, "function")?;
        let p = point(x, n, f.0.dimension)?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = f.0.eval(&p)?;
        Ok(())
    })
}

/// # Safety
/// `f` comes from `msx_function_from_json` or is null.
#[no_mangle]
pub unsafe extern "C" fn msx_function_free(f: *mut MsxFunction) {
    free(f)
}

/// Builds the exploratory measure of `f` on `body` at accuracy `eps`.
///
/// # Safety
/// Handles are live and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_measure_build(
    body: *const MsxBody,
    f: *const MsxFunction,
    eps: f64,
    profile: MsxProfile,
    seed: u64,
    out: *mut *mut MsxMeasure,
) -> MsxStatus {
    guard(|| {
        let b = as_ref(body, "body")?;
        let f = as_ref(f, "function")?;
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")).into());
        }
        let profile = match profile {
            MsxProfile::Calibrated => ProfileName::Calibrated,
            MsxProfile::Paper => ProfileName::Paper,
        };
        let params = BuildParams::with_profile(profile);
        let mu = build_exploratory_measure(&b.0, &f.0, eps, &params, &mut rng::seeded(seed))?;
        put(out, MsxMeasure(mu))
    })
}

/// # Safety
/// `json` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_measure_from_json(json: *const c_char, out: *mut *mut MsxMeasure) -> MsxStatus {
    guard(|| put(out, MsxMeasure(ExplorationMeasure::from_json(as_str(json, "json")?)?)))
}

/// Writes a newly allocated JSON string to `out`; release it with
/// `msx_string_free`.
///
/// # Safety
/// `m` is live and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_measure_to_json(m: *const MsxMeasure, out: *mut *mut c_char) -> MsxStatus {
    guard(|| {
        let m = as_ref(m, "measure")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(m.0.to_json()).map_err(|e| Fail::Status(MsxStatus::Panic, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `m` is a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn msx_measure_dimension(m: *const MsxMeasure) -> usize {
    m.as_ref().map_or(0, |m| m.0.dimension)
}

/// Draws `count` points into `out`, row after row; `out_len` must be at
/// least `count` times the dimension.
///
/// # Safety
/// `out` points to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn msx_measure_sample(
    m: *const MsxMeasure,
    seed: u64,
    count: usize,
    out: *mut f64,
    out_len: usize,
) -> MsxStatus {
    guard(|| {
        let m = as_ref(m, "measure")?;
        let n = m.0.dimension;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < count * n {
            return Err(Error::InvalidArgument(format!("buffer holds {out_len} values, need {}", count * n)).into());
        }
        let buf = std::slice::from_raw_parts_mut(out, count * n);
        let mut r = rng::seeded(seed);
        for row in buf.chunks_mut(n.max(1)) {
            row.copy_from_slice(m.0.sample(&mut r)?.as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `m` comes from this library or is null.
#[no_mangle]
pub unsafe extern "C" fn msx_measure_free(m: *mut MsxMeasure) {
    free(m)
}

/// Estimates μ{|f − g| > gap·max(ε, f)} from `samples` draws and compares
/// the lower confidence bound with `threshold`.
///
/// # Safety
/// Handles are live and `report` is writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn msx_verify(
    m: *const MsxMeasure,
    f: *const MsxFunction,
    g: *const MsxFunction,
    eps: f64,
    gap: f64,
    threshold: f64,
    samples: usize,
    seed: u64,
    report: *mut MsxReport,
) -> MsxStatus {
    guard(|| {
        let m = as_ref(m, "measure")?;
        let f = as_ref(f, "f")?;
        let g = as_ref(g, "g")?;
        if report.is_null() {
            return Err(null("report"));
        }
        let r = verify_exploration(&m.0, &f.0, &g.0, eps, gap, threshold, samples, &mut rng::seeded(seed))?;
        *report = MsxReport {
            p_hat: r.p_hat,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            threshold: r.threshold,
            samples: r.samples,
            pass: r.pass,
        };
        Ok(())
    })
}

/// Scenario file contents as JSON; loss references resolve against the
/// current directory.
///
/// # Safety
/// `json` is a NUL-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_environment_from_json(
    json: *const c_char,
    out: *mut *mut MsxEnvironment,
) -> MsxStatus {
    guard(|| {
        let file: ScenarioFile = serde_json::from_str(as_str(json, "json")?).map_err(Error::from)?;
        let env = file.into_environment(Path::new("."), &mut rng::child(0, 0x5c))?;
        put(out, MsxEnvironment(env))
    })
}

/// Plays one game with the default parameters.
///
/// # Safety
/// `env` is live and `stats` is writable.
#[no_mangle]
pub unsafe extern "C" fn msx_game_run(
    env: *const MsxEnvironment,
    policy: MsxPolicy,
    seed: u64,
    stats: *mut MsxGameStats,
) -> MsxStatus {
    guard(|| {
        let env = as_ref(env, "environment")?;
        if stats.is_null() {
            return Err(null("stats"));
        }
        let policy = match policy {
            MsxPolicy::TwoPoint => Policy::TwoPoint,
            MsxPolicy::Thompson => Policy::Thompson,
            MsxPolicy::Uniform => Policy::Uniform,
        };
        let s = run_game(&env.0, policy, seed, &GameParams::default())?.summary;
        *stats = MsxGameStats {
            horizon: s.horizon,
            net_size: s.net_size,
            true_scenario: s.true_scenario,
            sum_v: s.sum_v,
            half_entropy: s.half_entropy,
            regret: s.regret,
            regret_body: s.regret_body,
            step3_rounds: s.step3_rounds,
            fallback_rounds: s.fallback_rounds,
        };
        Ok(())
    })
}

/// # Safety
/// `env` comes from this library or is null.
#[no_mangle]
pub unsafe extern "C" fn msx_environment_free(env: *mut MsxEnvironment) {
    free(env)
}
