//! C ABI over `homog`.
//!
//! Handles are opaque and owned by the caller once returned; free them with the matching
//! `*_free`. Every fallible call returns a [`HomogStatus`]; on failure the message is available
//! from [`homog_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use homog::cell::{effective_on_grid, EffectiveConfig, EffectiveHamiltonian, Method, SampleGrid};
use homog::counterexample::{verify_strict_inequality, BumpProfile, CounterexampleConfig};
use homog::hamiltonian::{builtin_spec, HamiltonianSpec};
use homog::mather::{beta_zero, AlphaFunction};
use homog::metrics::{metrics_report, MetricsConfig, RegionSpec};
use homog::HomogError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8 or an out-of-range argument.
    InvalidArgument = 1,
    /// Invalid spec, grid, region or parameters.
    ConfigError = 2,
    /// A solver or quadrature failed to converge.
    SolverError = 3,
    SufficiencyViolated = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// A Hamiltonian.
pub struct HomogSpec(HamiltonianSpec);

/// An effective Hamiltonian sampled on a momentum grid.
pub struct HomogEffective(EffectiveHamiltonian);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &HomogError) -> HomogStatus {
    use HomogError::*;
    match e.root_cause() {
        SufficiencyViolated { .. } => HomogStatus::SufficiencyViolated,
        InvalidGrid(_) | InvalidField(_) | InvalidSpec(_) | DimensionMismatch { .. }
        | InvalidWidth(_) | InvalidRegion(_) | DeltaTooLarge(_) | InvalidProfile(_)
        | CutoffOverlap(_) | InvalidConfig(_) | DimensionNot1(_) | UnsupportedSpec(_)
        | NotCompactlySupported | CflViolation { .. } | EmptyInput => HomogStatus::ConfigError,
        _ => HomogStatus::SolverError,
    }
}

/// Runs `f`, recording errors and catching panics.
fn guard(f: impl FnOnce() -> Result<(), (HomogStatus, String)>) -> HomogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HomogStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside homog");
            HomogStatus::Panic
        }
    }
}

fn lift(e: HomogError) -> (HomogStatus, String) {
    (status_of(&e), e.to_string())
}

fn invalid(msg: &str) -> (HomogStatus, String) {
    (HomogStatus::InvalidArgument, msg.to_string())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (HomogStatus, String)> {
    if s.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

fn into_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn homog_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// A built-in spec: `integrable`, `pendulum` or `bump`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_spec_builtin(
    name: *const c_char,
    dim: usize,
    out: *mut *mut HomogSpec,
) -> HomogStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let name = read_str(name, "name")?;
        let spec = builtin_spec(name, dim).map_err(lift)?;
        *out = Box::into_raw(Box::new(HomogSpec(spec)));
        Ok(())
    })
}

/// A spec from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_spec_from_json(
    json: *const c_char,
    out: *mut *mut HomogSpec,
) -> HomogStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let text = read_str(json, "json")?;
        let spec = HamiltonianSpec::from_json(text).map_err(lift)?;
        *out = Box::into_raw(Box::new(HomogSpec(spec)));
        Ok(())
    })
}

/// # Safety
/// `spec` must come from a `homog_spec_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn homog_spec_free(spec: *mut HomogSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Dimension of the spec, or 0 for null.
///
/// # Safety
/// `spec` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn homog_spec_dim(spec: *const HomogSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.dim())
}

/// `H̄` on `count` points of `[lo, hi]` per axis. `method` is `minimax`, `minimax-direct`,
/// `quadrature` or `lax-oleinik`.
///
/// # Safety
/// `spec` must be a live handle, `method` a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_effective(
    spec: *const HomogSpec,
    lo: f64,
    hi: f64,
    count: usize,
    method: *const c_char,
    out: *mut *mut HomogEffective,
) -> HomogStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| invalid("spec is null"))?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let method: Method = read_str(method, "method")?.parse().map_err(lift)?;
        let grid = match spec.0.dim() {
            1 => SampleGrid::line(lo, hi, count),
            _ => SampleGrid::square(lo, hi, count),
        }
        .map_err(lift)?;
        let eff = effective_on_grid(&spec.0, &grid, method, &EffectiveConfig::default()).map_err(lift)?;
        *out = Box::into_raw(Box::new(HomogEffective(eff)));
        Ok(())
    })
}

/// # Safety
/// `eff` must come from [`homog_effective`], or be null.
#[no_mangle]
pub unsafe extern "C" fn homog_effective_free(eff: *mut HomogEffective) {
    if !eff.is_null() {
        drop(Box::from_raw(eff));
    }
}

/// Number of samples, or 0 for null.
///
/// # Safety
/// `eff` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn homog_effective_len(eff: *const HomogEffective) -> usize {
    eff.as_ref().map_or(0, |e| e.0.len())
}

/// Copies values and bounds into caller buffers of length `len`; any buffer may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles; `eff` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn homog_effective_copy(
    eff: *const HomogEffective,
    value: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> HomogStatus {
    guard(|| {
        let eff = eff.as_ref().ok_or_else(|| invalid("effective is null"))?;
        if len != eff.0.len() {
            return Err(invalid(&format!("buffer length {len}, need {}", eff.0.len())));
        }
        for (src, dst) in [(&eff.0.value, value), (&eff.0.lower, lower), (&eff.0.upper, upper)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
            }
        }
        Ok(())
    })
}

/// `β(0) = -min H̄` with sub-grid refinement.
///
/// # Safety
/// `eff` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_beta_zero(eff: *const HomogEffective, out: *mut f64) -> HomogStatus {
    guard(|| {
        let eff = eff.as_ref().ok_or_else(|| invalid("effective is null"))?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = beta_zero(&AlphaFunction::from_effective(&eff.0)).map_err(lift)?.value;
        Ok(())
    })
}

/// The samples as JSON; free with [`homog_string_free`].
///
/// # Safety
/// `eff` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_effective_json(
    eff: *const HomogEffective,
    out: *mut *mut c_char,
) -> HomogStatus {
    guard(|| {
        let eff = eff.as_ref().ok_or_else(|| invalid("effective is null"))?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = into_c_string(eff.0.to_json());
        Ok(())
    })
}

/// The metric report for `region` (`sublevel:<r>` or `unit-ball`) as JSON.
///
/// # Safety
/// `spec` must be a live handle, `region` a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_metrics_json(
    spec: *const HomogSpec,
    region: *const c_char,
    out: *mut *mut c_char,
) -> HomogStatus {
    guard(|| {
        let spec = spec.as_ref().ok_or_else(|| invalid("spec is null"))?;
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let region: RegionSpec = read_str(region, "region")?.parse().map_err(lift)?;
        let report = metrics_report(&spec.0, region, &MetricsConfig::default()).map_err(lift)?;
        *out = into_c_string(report.to_json());
        Ok(())
    })
}

/// The bump certificate for `(δ, C, c)` in dimension 1 as JSON; `verdict` receives 1 or 0.
///
/// # Safety
/// `out` must be a valid pointer; `verdict` may be null.
#[no_mangle]
pub unsafe extern "C" fn homog_counterexample_json(
    delta: f64,
    high: f64,
    low: f64,
    out: *mut *mut c_char,
    verdict: *mut i32,
) -> HomogStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        let profile = BumpProfile {
            delta,
            high,
            low,
            order: 2,
        };
        let cert = verify_strict_inequality(&profile, &CounterexampleConfig::default()).map_err(lift)?;
        if !verdict.is_null() {
            *verdict = i32::from(cert.verdict);
        }
        *out = into_c_string(cert.to_json());
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn homog_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
