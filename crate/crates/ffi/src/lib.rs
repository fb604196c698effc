//! C ABI over `fiber_asymptotics`: problems are opaque handles, results come back as
//! JSON or CSV strings owned by the library.
//!
//! Every function returns an [`FaStatus`]; on failure the message is available from
//! [`fa_last_error`] on the same thread. Strings returned through `out` pointers must be
//! released with [`fa_string_free`], handles with [`fa_problem_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fiber_asymptotics::cli::{
    classify_problem, coarea_problem, fixture, predict_problem, schedule_csv, schedule_problem,
    validate_problem, ProblemSpec,
};
use fiber_asymptotics::sphere::density_csv;
use fiber_asymptotics::Error;

/// Status codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    /// Malformed input: bad JSON, unknown fixture, inconsistent dimensions.
    InputError = 1,
    /// Divergent integral, unsupported germ or failed numerics.
    Refused = 2,
    /// `fa_validate` ran but the relative gap exceeds the tolerance.
    ValidationFailed = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Opaque problem handle.
pub struct FaProblem {
    spec: ProblemSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> FaStatus {
    match e.exit_code() {
        1 => FaStatus::InputError,
        _ => FaStatus::Refused,
    }
}

/// Run `f`, translating errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<FaStatus, (FaStatus, String)>) -> FaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == FaStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside fiber_asymptotics");
            FaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (FaStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (FaStatus, String)> {
    if p.is_null() {
        return Err((FaStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (FaStatus::InvalidUtf8, e.to_string()))
}

unsafe fn problem<'a>(p: *const FaProblem) -> Result<&'a FaProblem, (FaStatus, String)> {
    p.as_ref()
        .ok_or((FaStatus::NullPointer, "null problem handle".into()))
}

unsafe fn hand_out(out: *mut *mut c_char, text: String) -> Result<(), (FaStatus, String)> {
    if out.is_null() {
        return Err((FaStatus::NullPointer, "null output pointer".into()));
    }
    let c = CString::new(text).map_err(|e| (FaStatus::InputError, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn store(
    out: *mut *mut FaProblem,
    spec: ProblemSpec,
) -> Result<FaStatus, (FaStatus, String)> {
    if out.is_null() {
        return Err((FaStatus::NullPointer, "null output pointer".into()));
    }
    *out = Box::into_raw(Box::new(FaProblem { spec }));
    Ok(FaStatus::Ok)
}

/// Parse a problem description (JSON, schema 1).
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_from_json(
    json: *const c_char,
    out: *mut *mut FaProblem,
) -> FaStatus {
    guard(|| {
        let text = read_str(json)?;
        store(out, ProblemSpec::from_json(text).map_err(lib_err)?)
    })
}

/// Load a built-in fixture such as `"conical"` or `"quartic"`.
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_from_fixture(
    name: *const c_char,
    out: *mut *mut FaProblem,
) -> FaStatus {
    guard(|| {
        let name = read_str(name)?;
        let spec =
            fixture(name).ok_or((FaStatus::InputError, format!("unknown fixture `{name}`")))?;
        store(out, spec)
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_free(p: *mut FaProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// The problem with defaults filled in, as JSON.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_problem_to_json(
    p: *const FaProblem,
    out: *mut *mut c_char,
) -> FaStatus {
    guard(|| {
        hand_out(out, problem(p)?.spec.to_json())?;
        Ok(FaStatus::Ok)
    })
}

/// Classification JSON. An Unsupported germ still yields the JSON, with status `Refused`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_classify(p: *const FaProblem, out: *mut *mut c_char) -> FaStatus {
    guard(|| {
        let c = classify_problem(&problem(p)?.spec).map_err(lib_err)?;
        hand_out(out, serde_json::to_string(&c).expect("outputs serialize"))?;
        if c.case == fiber_asymptotics::germ::Case::Unsupported {
            return Err((FaStatus::Refused, "germ::classify: Unsupported".into()));
        }
        Ok(FaStatus::Ok)
    })
}

/// First `count` schedule entries as CSV `num,den,logpower`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_schedule(
    p: *const FaProblem,
    count: usize,
    out: *mut *mut c_char,
) -> FaStatus {
    guard(|| {
        let terms = schedule_problem(&problem(p)?.spec, count).map_err(lib_err)?;
        hand_out(out, schedule_csv(&terms))?;
        Ok(FaStatus::Ok)
    })
}

/// Prediction JSON.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_predict(p: *const FaProblem, out: *mut *mut c_char) -> FaStatus {
    guard(|| {
        let pred = predict_problem(&problem(p)?.spec).map_err(lib_err)?;
        hand_out(
            out,
            serde_json::to_string(&pred).expect("outputs serialize"),
        )?;
        Ok(FaStatus::Ok)
    })
}

/// Leading coefficient of the prediction.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_leading_coefficient(p: *const FaProblem, out: *mut f64) -> FaStatus {
    guard(|| {
        let pred = predict_problem(&problem(p)?.spec).map_err(lib_err)?;
        let c = pred
            .leading_coefficient()
            .ok_or((FaStatus::Refused, "no leading coefficient".into()))?;
        let slot = out
            .as_mut()
            .ok_or((FaStatus::NullPointer, "null output pointer".into()))?;
        *slot = c;
        Ok(FaStatus::Ok)
    })
}

/// Co-area density CSV `w,lvol`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_coarea(p: *const FaProblem, out: *mut *mut c_char) -> FaStatus {
    guard(|| {
        let d = coarea_problem(&problem(p)?.spec).map_err(lib_err)?;
        hand_out(out, density_csv(&d))?;
        Ok(FaStatus::Ok)
    })
}

/// Comparison JSON from predict + oracle + fit; status `ValidationFailed` when the gap is too large.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_validate(p: *const FaProblem, out: *mut *mut c_char) -> FaStatus {
    guard(|| {
        let v = validate_problem(&problem(p)?.spec).map_err(lib_err)?;
        hand_out(
            out,
            serde_json::to_string(&v.comparison).expect("outputs serialize"),
        )?;
        if !v.comparison.pass {
            return Err((
                FaStatus::ValidationFailed,
                format!(
                    "relative gap {:e} exceeds {:e}",
                    v.comparison.relative_gap, v.comparison.tolerance
                ),
            ));
        }
        Ok(FaStatus::Ok)
    })
}

/// Copy of the calling thread's last error message, or null. Free with [`fa_string_free`].
#[no_mangle]
pub extern "C" fn fa_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null_mut(), |s| s.clone().into_raw())
    })
}

/// Release a string produced by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn fa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
