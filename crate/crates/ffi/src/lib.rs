//! C ABI over the phasemeter toolkit.
//!
//! Objects cross the boundary as opaque handles created by `pm_*` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! status code; on failure the message is kept per thread and can be read
//! back with [`pm_last_error_message`]. Panics are caught at the boundary
//! and reported as [`PM_PANIC`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use phasemeter::fock::{make_number_state, LengthScale, StateVector, C64};
use phasemeter::joint::{build_process, worst_case_errors, JointSampling, MeasurementConfig, MeasurementProcess, Regime};
use phasemeter::phase_space::{
    default_wavevectors, husimi_q, measure_equality_oracle, profile_axes, OracleTolerances, PhaseSpaceGrid, Profile,
    Verdict,
};
use phasemeter::{Error, ErrorKind};

pub const PM_OK: i32 = 0;
/// Invalid input: bad parameter, mismatched axes, malformed data.
pub const PM_VALIDATION: i32 = 1;
/// The grid or truncation is too small for the requested accuracy.
pub const PM_NUMERICAL: i32 = 2;
pub const PM_IO: i32 = 3;
/// A required pointer argument was null.
pub const PM_NULL: i32 = 4;
pub const PM_PANIC: i32 = 5;

pub const PM_PROFILE_DEFAULT: i32 = 0;
pub const PM_PROFILE_FINE: i32 = 1;

pub const PM_RETRODICTIVE: i32 = 0;
pub const PM_PREDICTIVE: i32 = 1;

pub const PM_VERDICT_EQUAL: i32 = 0;
pub const PM_VERDICT_MOMENTS_ONLY: i32 = 1;
pub const PM_VERDICT_UNEQUAL: i32 = 2;

/// Truncated number-basis state.
pub struct PmState(StateVector);

/// Configured two-pointer measurement.
pub struct PmProcess(MeasurementProcess);

/// Sampled phase-space distribution.
pub struct PmGrid(PhaseSpaceGrid);

/// Worst-case error summary for one regime.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PmErrorSummary {
    pub delta_x: f64,
    pub delta_p: f64,
    pub product: f64,
    pub bias_x: f64,
    pub bias_p: f64,
    pub resolution_lambda: f64,
}

/// Result of the measure-equality oracle.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PmComparison {
    /// One of the `PM_VERDICT_*` codes.
    pub verdict: i32,
    pub moment_distance: f64,
    pub characteristic_distance: f64,
    pub l1_distance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn remember(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation => PM_VALIDATION,
        ErrorKind::Numerical => PM_NUMERICAL,
        ErrorKind::Io => PM_IO,
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PM_OK
        }
        Ok(Err(Failure::Null(what))) => {
            remember(format!("null pointer: {what}"));
            PM_NULL
        }
        Ok(Err(Failure::Core(e))) => {
            remember(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            remember(format!("panic: {msg}"));
            PM_PANIC
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn profile(code: i32) -> Result<Profile, Failure> {
    match code {
        PM_PROFILE_DEFAULT => Ok(Profile::Default),
        PM_PROFILE_FINE => Ok(Profile::Fine),
        other => Err(Error::invalid("profile", format!("unknown profile code {other}")).into()),
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// or 0 if the last call succeeded. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Number state `|n>` in a space of dimension `dim` at length scale `lambda`.
///
/// # Safety
/// `out` must be a valid pointer to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pm_state_number(n: usize, dim: usize, lambda: f64, out: *mut *mut PmState) -> i32 {
    guard(|| {
        let lam = LengthScale::new(lambda)?;
        put(out, PmState(make_number_state(n, dim, lam)?), "out")
    })
}

/// State from `dim` amplitudes given as separate real and imaginary arrays,
/// normalised on the way in. Zero or non-finite input is rejected.
///
/// # Safety
/// `re` and `im` must each point to `dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pm_state_from_amplitudes(
    re: *const f64,
    im: *const f64,
    dim: usize,
    lambda: f64,
    out: *mut *mut PmState,
) -> i32 {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("amplitudes"));
        }
        let re = std::slice::from_raw_parts(re, dim);
        let im = std::slice::from_raw_parts(im, dim);
        let amps = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        let psi = StateVector::normalized_from(amps, LengthScale::new(lambda)?)?;
        put(out, PmState(psi), "out")
    })
}

/// # Safety
/// `state` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pm_state_free(state: *mut PmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Husimi function of `state` on the standard grid of `profile_code`.
///
/// # Safety
/// `state` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pm_husimi(state: *const PmState, profile_code: i32, out: *mut *mut PmGrid) -> i32 {
    guard(|| {
        let psi = &get(state, "state")?.0;
        let (ax, ap) = profile_axes(profile(profile_code)?, psi.scale());
        put(out, PmGrid(husimi_q(psi, ax, ap)?), "out")
    })
}

/// Optimal two-pointer process at resolution `lambda` with coupling `kappa`.
///
/// # Safety
/// `out` must be a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pm_process_optimal(
    lambda: f64,
    kappa: f64,
    profile_code: i32,
    out: *mut *mut PmProcess,
) -> i32 {
    guard(|| {
        let sampling = JointSampling::for_profile(profile(profile_code)?);
        let cfg = MeasurementConfig::optimal(lambda, kappa, sampling)?;
        put(out, PmProcess(build_process(&cfg)?), "out")
    })
}

/// # Safety
/// `process` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pm_process_free(process: *mut PmProcess) {
    if !process.is_null() {
        drop(Box::from_raw(process));
    }
}

/// Readout distribution of `process` applied to `state`.
///
/// # Safety
/// Handles must be live and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pm_pointer_distribution(
    process: *const PmProcess,
    state: *const PmState,
    out: *mut *mut PmGrid,
) -> i32 {
    guard(|| {
        let process = &get(process, "process")?.0;
        let psi = &get(state, "state")?.0;
        let j = process.evolve(psi)?;
        put(out, PmGrid(process.pointer_distribution(&j)?), "out")
    })
}

/// Worst-case errors of `process` over number levels below `dim`.
///
/// # Safety
/// `process` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_error_report(
    process: *const PmProcess,
    regime_code: i32,
    dim: usize,
    out: *mut PmErrorSummary,
) -> i32 {
    guard(|| {
        let process = &get(process, "process")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let regime = match regime_code {
            PM_RETRODICTIVE => Regime::Retrodictive,
            PM_PREDICTIVE => Regime::Predictive,
            other => return Err(Error::invalid("regime", format!("unknown regime code {other}")).into()),
        };
        let r = worst_case_errors(process, regime, dim)?;
        *out = PmErrorSummary {
            delta_x: r.delta_x,
            delta_p: r.delta_p,
            product: r.product,
            bias_x: r.bias_x,
            bias_p: r.bias_p,
            resolution_lambda: r.resolution_lambda,
        };
        Ok(())
    })
}

/// Measure-equality oracle with default tolerances and wave vectors.
///
/// # Safety
/// Both grids must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_compare_grids(
    first: *const PmGrid,
    second: *const PmGrid,
    max_order: usize,
    out: *mut PmComparison,
) -> i32 {
    guard(|| {
        let a = &get(first, "first")?.0;
        let b = &get(second, "second")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let ks = default_wavevectors(a.lambda().get());
        let r = measure_equality_oracle(a, b, max_order, &ks, OracleTolerances::default())?;
        *out = PmComparison {
            verdict: match r.verdict {
                Verdict::Equal => PM_VERDICT_EQUAL,
                Verdict::MomentsOnly => PM_VERDICT_MOMENTS_ONLY,
                Verdict::Unequal => PM_VERDICT_UNEQUAL,
            },
            moment_distance: r.moment_distance,
            characteristic_distance: r.characteristic_distance,
            l1_distance: r.l1_distance,
        };
        Ok(())
    })
}

/// Axis metadata; `axis` is 0 for position, 1 for momentum.
///
/// # Safety
/// `grid` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pm_grid_axis(
    grid: *const PmGrid,
    axis: i32,
    start: *mut f64,
    step: *mut f64,
    len: *mut usize,
) -> i32 {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        if start.is_null() || step.is_null() || len.is_null() {
            return Err(Failure::Null("axis outputs"));
        }
        let a = match axis {
            0 => g.x_axis(),
            1 => g.p_axis(),
            other => return Err(Error::invalid("axis", format!("{other} is not 0 or 1")).into()),
        };
        *start = a.start;
        *step = a.step;
        *len = a.len;
        Ok(())
    })
}

/// Copies the values, row-major with position as the slow index, into
/// `buf`, which must hold exactly `nx * np` doubles.
///
/// # Safety
/// `grid` must be a live handle and `buf` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pm_grid_values(grid: *const PmGrid, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        let v = g.values();
        if len != v.len() {
            return Err(Error::invalid("len", format!("grid holds {} values, buffer {len}", v.len())).into());
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, len);
        Ok(())
    })
}

/// Total probability on the grid.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pm_grid_mass(grid: *const PmGrid, out: *mut f64) -> i32 {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = g.mass();
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pm_grid_free(grid: *mut PmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
