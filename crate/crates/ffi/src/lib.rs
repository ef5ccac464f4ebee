//! C interface to the bound engine. Objects cross the boundary as opaque
//! handles owned by the caller and released with the matching `_free`
//! function. Every call returns a [`ChandiscStatus`]; the message of the
//! last failure on the calling thread is available from
//! [`chandisc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use chandisc::channels::{ChannelEnsemble, Preset};
use chandisc::cli::{self, BoundReport, RunConfig, RunOptions};
use chandisc::{scenarios, testers, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChandiscStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    Solver = 3,
    SizeCap = 4,
    Invalid = 5,
    VerifyFailed = 6,
    Missing = 7,
    Panic = 8,
}

/// Parsed run configuration.
pub struct ChandiscConfig(RunConfig);

/// Bound report produced by [`chandisc_run`] or parsed from JSON.
pub struct ChandiscReport(BoundReport);

/// Channel ensemble.
pub struct ChandiscEnsemble(ChannelEnsemble);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ChandiscStatus {
    match e {
        Error::Parse(_) | Error::BadReport(_) => ChandiscStatus::Parse,
        Error::Solver(_) | Error::InfeasibleParty(_) => ChandiscStatus::Solver,
        Error::SizeOverflow(_) => ChandiscStatus::SizeCap,
        _ => ChandiscStatus::Invalid,
    }
}

fn guard(f: impl FnOnce() -> Result<(), ChandiscStatus>) -> ChandiscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChandiscStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            ChandiscStatus::Panic
        }
    }
}

fn fail(e: Error) -> ChandiscStatus {
    set_error(&e.to_string());
    status_of(&e)
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ChandiscStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(ChandiscStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        ChandiscStatus::Parse
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, ChandiscStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        ChandiscStatus::NullPointer
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), ChandiscStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(ChandiscStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), ChandiscStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(ChandiscStatus::NullPointer);
    }
    *out = value;
    Ok(())
}

/// Message of the last failed call on this thread. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn chandisc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_config_parse(toml: *const c_char, out: *mut *mut ChandiscConfig) -> ChandiscStatus {
    guard(|| {
        let text = read_str(toml)?;
        let cfg = RunConfig::parse(text).map_err(fail)?;
        store(out, ChandiscConfig(cfg))
    })
}

/// # Safety
/// `cfg` must come from [`chandisc_config_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chandisc_config_free(cfg: *mut ChandiscConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Solves the configured scenario. `workers = 0` uses all cores; the seed
/// overrides the config when `has_seed` is true. Subtask failures are kept
/// in the report and reflected in the returned status.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_run(
    cfg: *const ChandiscConfig,
    workers: usize,
    has_seed: bool,
    seed: u64,
    out: *mut *mut ChandiscReport,
) -> ChandiscStatus {
    let mut code = ChandiscStatus::Ok;
    let st = guard(|| {
        let cfg = deref(cfg)?;
        let opts = RunOptions { workers: (workers > 0).then_some(workers), dump_dir: None, seed: has_seed.then_some(seed) };
        let report = cli::run(&cfg.0, &opts).map_err(fail)?;
        code = match report.exit_code() {
            0 => ChandiscStatus::Ok,
            4 => ChandiscStatus::SizeCap,
            _ => ChandiscStatus::Solver,
        };
        if let Some(f) = report.failures().first() {
            set_error(&f.message);
        }
        store(out, ChandiscReport(report))
    });
    if st == ChandiscStatus::Ok {
        code
    } else {
        st
    }
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_from_json(json: *const c_char, out: *mut *mut ChandiscReport) -> ChandiscStatus {
    guard(|| {
        let text = read_str(json)?;
        let r = BoundReport::from_json(text).map_err(fail)?;
        store(out, ChandiscReport(r))
    })
}

/// Serialised report; release with [`chandisc_string_free`].
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_to_json(report: *const ChandiscReport, out: *mut *mut c_char) -> ChandiscStatus {
    guard(|| {
        let r = deref(report)?;
        let s = CString::new(r.0.to_json()).map_err(|_| fail(Error::BadReport("interior NUL".into())))?;
        write(out, s.into_raw())
    })
}

/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_lower(report: *const ChandiscReport, out: *mut f64) -> ChandiscStatus {
    guard(|| {
        let r = deref(report)?;
        match r.0.lower.as_ref().and_then(|l| l.value) {
            Some(v) => write(out, v),
            None => {
                set_error("report has no lower bound");
                Err(ChandiscStatus::Missing)
            }
        }
    })
}

/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_upper(report: *const ChandiscReport, out: *mut f64) -> ChandiscStatus {
    guard(|| {
        let r = deref(report)?;
        match r.0.upper.as_ref().and_then(|u| u.value) {
            Some(v) => write(out, v),
            None => {
                set_error("report has no upper bound");
                Err(ChandiscStatus::Missing)
            }
        }
    })
}

/// Re-checks the stored certificates; `VerifyFailed` names the first
/// failing check in [`chandisc_last_error`].
///
/// # Safety
/// `report` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_verify(report: *const ChandiscReport) -> ChandiscStatus {
    guard(|| {
        let r = deref(report)?;
        let v = cli::verify(&r.0).map_err(fail)?;
        match v.checks.iter().find(|c| !c.passed) {
            None => Ok(()),
            Some(c) => {
                set_error(&format!("{}: residual {:.3e}", c.name, c.residual));
                Err(ChandiscStatus::VerifyFailed)
            }
        }
    })
}

/// # Safety
/// `report` must be a report handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chandisc_report_free(report: *mut ChandiscReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be a string returned by this library and not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chandisc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Named ensemble, e.g. `"clock_shift:3"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_ensemble_preset(name: *const c_char, out: *mut *mut ChandiscEnsemble) -> ChandiscStatus {
    guard(|| {
        let name = read_str(name)?;
        let e = Preset::parse(name).and_then(|p| p.ensemble()).map_err(fail)?;
        store(out, ChandiscEnsemble(e))
    })
}

/// # Safety
/// `e` must be a live ensemble handle.
#[no_mangle]
pub unsafe extern "C" fn chandisc_ensemble_len(e: *const ChandiscEnsemble) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// Optimal success probability over single-copy testers with unlimited
/// memory.
///
/// # Safety
/// `e` must be a live ensemble handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chandisc_optimal_single_copy(e: *const ChandiscEnsemble, out: *mut f64) -> ChandiscStatus {
    guard(|| {
        let e = deref(e)?;
        let o = testers::optimal_single_copy(&e.0).map_err(fail)?;
        write(out, o.value)
    })
}

/// # Safety
/// `e` must be an ensemble handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chandisc_ensemble_free(e: *mut ChandiscEnsemble) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// `min{1, d_E/d}`; negative for `d < 2`.
#[no_mangle]
pub extern "C" fn chandisc_oracle_clock_shift(d: usize, d_e: usize) -> f64 {
    if d < 2 {
        return -1.0;
    }
    scenarios::oracle_clock_shift(d, d_e)
}
