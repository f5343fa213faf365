//! C ABI over the cascade.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Strings returned as `char *` are freed with
//! [`irflow_string_free`]. On a non-OK status, [`irflow_last_error_message`]
//! describes the failure for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irflow::cli::{cascade_csv, RunConfig};
use irflow::multiscale::{run_cascade_with, CascadeReport};
use irflow::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IrflowStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// The report was produced but at least one bound check failed.
    BoundCheckFailed = 2,
    /// A level could not be solved; the report holds the scales before it.
    SolverFailure = 3,
    ConfigError = 4,
    Panic = 5,
}

/// Model and run settings.
pub struct IrflowParams {
    config: RunConfig,
}

/// Result of one cascade run.
pub struct IrflowReport {
    report: CascadeReport,
}

/// One scale of the cascade. Quantities undefined at the deepest scale are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct IrflowScaleRecord {
    pub n: usize,
    pub rho_n: c_double,
    pub e_n: c_double,
    pub gap_n: c_double,
    pub gap_tilde: c_double,
    pub energy_step: c_double,
    pub proj_step: c_double,
    pub contraction_q: c_double,
    pub sigma1_elem: c_double,
    pub residual_full: c_double,
    pub dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> IrflowStatus {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => IrflowStatus::ConfigError,
        _ => IrflowStatus::SolverFailure,
    }
}

fn guard(f: impl FnOnce() -> IrflowStatus) -> IrflowStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IrflowStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, IrflowStatus> {
    if s.is_null() {
        set_error(format!("{what} is null"));
        return Err(IrflowStatus::InvalidArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        IrflowStatus::InvalidArgument
    })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Baseline parameters. Never null.
#[no_mangle]
pub extern "C" fn irflow_params_default() -> *mut IrflowParams {
    Box::into_raw(Box::new(IrflowParams {
        config: RunConfig::default(),
    }))
}

/// Parses a JSON config (same keys as the command-line tool) into `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn irflow_params_from_json(json: *const c_char, out: *mut *mut IrflowParams) -> IrflowStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return IrflowStatus::InvalidArgument;
        }
        *out = ptr::null_mut();
        let text = match read_str(json, "json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_json(text).and_then(|c| c.validate().map(|_| c)) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(IrflowParams { config }));
                IrflowStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Sets one numeric parameter: `g`, `gamma`, `kappa`, `tol_eig`, `J`,
/// `N_max`, `N_scales`, or `allow_out_of_regime` (nonzero for true).
///
/// # Safety
/// `params` must come from this library; `name` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn irflow_params_set(
    params: *mut IrflowParams,
    name: *const c_char,
    value: c_double,
) -> IrflowStatus {
    guard(|| {
        let Some(p) = params.as_mut() else {
            set_error("params is null");
            return IrflowStatus::InvalidArgument;
        };
        let name = match read_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        if name == "allow_out_of_regime" {
            p.config.allow_out_of_regime = value != 0.0;
            return IrflowStatus::Ok;
        }
        match p.config.with_param(name, value) {
            Ok(c) => {
                p.config = c;
                IrflowStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `params` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_params_free(params: *mut IrflowParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Runs the cascade. A report is stored in `*out` for `Ok`,
/// `BoundCheckFailed` and `SolverFailure`; otherwise `*out` is null.
///
/// # Safety
/// `params` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn irflow_run_cascade(params: *const IrflowParams, out: *mut *mut IrflowReport) -> IrflowStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return IrflowStatus::InvalidArgument;
        }
        *out = ptr::null_mut();
        let Some(p) = params.as_ref() else {
            set_error("params is null");
            return IrflowStatus::InvalidArgument;
        };
        if let Err(e) = p.config.validate() {
            set_error(e.to_string());
            return status_of(&e);
        }
        match run_cascade_with(&p.config.params(), &p.config.options()) {
            Ok(report) => {
                let status = if let Some(f) = &report.failure {
                    set_error(f.clone());
                    IrflowStatus::SolverFailure
                } else if !report.all_checks_pass() {
                    let names: Vec<_> = report.failed_checks().map(|c| c.name.clone()).collect();
                    set_error(format!("failed checks: {}", names.join(", ")));
                    IrflowStatus::BoundCheckFailed
                } else {
                    IrflowStatus::Ok
                };
                *out = Box::into_raw(Box::new(IrflowReport { report }));
                status
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_free(report: *mut IrflowReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of recorded scales; 0 for a null report.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_num_scales(report: *const IrflowReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.records.len())
}

/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_num_checks(report: *const IrflowReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.checks.len())
}

/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_num_failed_checks(report: *const IrflowReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.failed_checks().count())
}

/// Copies scale `n` into `*out`.
///
/// # Safety
/// `report` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_record(
    report: *const IrflowReport,
    n: usize,
    out: *mut IrflowScaleRecord,
) -> IrflowStatus {
    guard(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            set_error("report or out is null");
            return IrflowStatus::InvalidArgument;
        };
        let Some(rec) = r.report.records.get(n) else {
            set_error(format!("scale {n} out of range (have {})", r.report.records.len()));
            return IrflowStatus::InvalidArgument;
        };
        let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = IrflowScaleRecord {
            n: rec.n,
            rho_n: rec.rho_n,
            e_n: rec.e_n,
            gap_n: rec.gap_n,
            gap_tilde: nan(rec.gap_tilde),
            energy_step: nan(rec.energy_step),
            proj_step: nan(rec.proj_step),
            contraction_q: rec.contraction_q,
            sigma1_elem: rec.sigma1_elem,
            residual_full: rec.residual_full,
            dim: rec.dim,
        };
        IrflowStatus::Ok
    })
}

/// Ground-energy estimate and its error bound.
///
/// # Safety
/// `report` must come from this library; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_ground_energy(
    report: *const IrflowReport,
    e_gs: *mut c_double,
    error_bound: *mut c_double,
) -> IrflowStatus {
    guard(|| {
        let (Some(r), false, false) = (report.as_ref(), e_gs.is_null(), error_bound.is_null()) else {
            set_error("null argument");
            return IrflowStatus::InvalidArgument;
        };
        match &r.report.egs {
            Some(e) => {
                *e_gs = e.e_gs;
                *error_bound = e.error_bound;
                IrflowStatus::Ok
            }
            None => {
                set_error("no estimate: fewer than two scales recorded");
                IrflowStatus::InvalidArgument
            }
        }
    })
}

/// Full report as JSON; null on failure.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_to_json(report: *const IrflowReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("report is null");
        return ptr::null_mut();
    };
    match serde_json::to_string(&r.report) {
        Ok(s) => into_c_string(s),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Per-scale table in the command-line `cascade.csv` layout; null on failure.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_report_to_csv(report: *const IrflowReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => into_c_string(cascade_csv(&r.report)),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn irflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn irflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn irflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_values_are_stable() {
        assert_eq!(IrflowStatus::Ok as i32, 0);
        assert_eq!(IrflowStatus::Panic as i32, 5);
    }

    #[test]
    fn guard_contains_panics() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, IrflowStatus::Panic);
        let msg = unsafe { CStr::from_ptr(irflow_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
    }
}
