//! C ABI over `quadhull`: opaque problem and shadow handles, integer status
//! codes, and a per-thread last-error message.
//!
//! Every function returns a [`QhStatus`]; outputs go through caller-provided
//! pointers and are written only on success. Handles are freed with the
//! matching `*_free` function, which accepts null.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use quadhull::cli::files::{parse_problem, LoadError};
use quadhull::ops::{membership, support};
use quadhull::quadratic::ProblemSpec;
use quadhull::repr::{build, spec_condition, SpectrahedralShadow};
use quadhull::sdp::{Direction, SdpStatus};
use quadhull::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed JSON or non-UTF-8 input.
    Parse = 2,
    /// Well-formed input that is not a valid problem.
    Validation = 3,
    /// The solver or a factorization failed.
    Numerical = 4,
    /// A buffer length does not match the problem.
    Dimension = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Outcome of a support query.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhSupportStatus {
    Optimal = 0,
    Unbounded = 1,
    Infeasible = 2,
}

/// Parsed problem.
pub struct QhProblem {
    spec: ProblemSpec,
}

/// Spectrahedral shadow built from a problem.
pub struct QhShadow {
    shadow: SpectrahedralShadow,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: QhStatus, msg: impl Into<String>) -> QhStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> QhStatus {
    let status = match e {
        Error::Validation(_) => QhStatus::Validation,
        Error::DimensionMismatch { .. } => QhStatus::Dimension,
        _ => QhStatus::Numerical,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> QhStatus) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == QhStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(QhStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        return if len == 0 { Some(&[]) } else { None };
    }
    Some(std::slice::from_raw_parts(ptr, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qh_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a JSON problem document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_problem_from_json(json: *const c_char, out: *mut *mut QhProblem) -> QhStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(QhStatus::Parse, "input is not UTF-8");
        };
        match parse_problem(text, &mut |_| {}) {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(QhProblem { spec }));
                QhStatus::Ok
            }
            Err(LoadError::Parse(m)) => fail(QhStatus::Parse, m),
            Err(LoadError::Invalid(e)) => from_error(e),
        }
    })
}

/// # Safety
/// `p` must be null or a handle from [`qh_problem_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_problem_free(p: *mut QhProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Parameter dimension `n` and output dimension `m`.
///
/// # Safety
/// `p` must be a live problem handle; `n` and `m` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qh_problem_dims(p: *const QhProblem, n: *mut usize, m: *mut usize) -> QhStatus {
    guard(|| {
        let (Some(p), false, false) = (p.as_ref(), n.is_null(), m.is_null()) else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        *n = p.spec.n();
        *m = p.spec.m();
        QhStatus::Ok
    })
}

/// Relaxation condition for two-constraint and rational problems. `holds`
/// receives 1 or 0 (1 for single-constraint problems, which need none) and
/// `margin` the best `λ_max` found (NaN when not applicable).
///
/// # Safety
/// `p` must be a live problem handle; `holds` and `margin` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qh_problem_condition(p: *const QhProblem, holds: *mut c_int, margin: *mut f64) -> QhStatus {
    guard(|| {
        let (Some(p), false, false) = (p.as_ref(), holds.is_null(), margin.is_null()) else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        match spec_condition(&p.spec) {
            Ok(None) => {
                *holds = 1;
                *margin = f64::NAN;
                QhStatus::Ok
            }
            Ok(Some(r)) => {
                *holds = c_int::from(r.holds);
                *margin = r.margin;
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Builds the shadow of a problem.
///
/// # Safety
/// `p` must be a live problem handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_shadow_build(p: *const QhProblem, out: *mut *mut QhShadow) -> QhStatus {
    guard(|| {
        let (Some(p), false) = (p.as_ref(), out.is_null()) else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        match build(&p.spec) {
            Ok(shadow) => {
                *out = Box::into_raw(Box::new(QhShadow { shadow }));
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be null or a handle from [`qh_shadow_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_shadow_free(s: *mut QhShadow) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Side length of the lifted PSD variable.
///
/// # Safety
/// `s` must be a live shadow handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_shadow_lift_dim(s: *const QhShadow, out: *mut usize) -> QhStatus {
    guard(|| {
        let (Some(s), false) = (s.as_ref(), out.is_null()) else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        *out = s.shadow.lift_dim();
        QhStatus::Ok
    })
}

/// Support value `max` (`maximize != 0`) or `min` of `ℓᵀy` over the shadow.
/// `value` is `±∞` when unbounded or empty. When `point` is non-null it
/// receives the optimal image (`len` entries) for optimal results.
///
/// # Safety
/// `ell` and `point` (if non-null) must hold `len` doubles; `status` and
/// `value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qh_support(
    s: *const QhShadow,
    ell: *const f64,
    len: usize,
    maximize: c_int,
    status: *mut QhSupportStatus,
    value: *mut f64,
    point: *mut f64,
) -> QhStatus {
    guard(|| {
        let (Some(s), Some(ell), false, false) = (s.as_ref(), slice(ell, len), status.is_null(), value.is_null())
        else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        if len != s.shadow.m() {
            return fail(
                QhStatus::Dimension,
                format!("direction has {len} entries, expected {}", s.shadow.m()),
            );
        }
        let sense = if maximize != 0 { Direction::Max } else { Direction::Min };
        match support(&s.shadow, ell, sense) {
            Ok(r) => {
                *status = match r.status {
                    SdpStatus::Optimal => QhSupportStatus::Optimal,
                    SdpStatus::Unbounded => QhSupportStatus::Unbounded,
                    SdpStatus::Infeasible => QhSupportStatus::Infeasible,
                    SdpStatus::NumericalTrouble => return fail(QhStatus::Numerical, "solver failed"),
                };
                *value = r.value;
                if let (false, Some(y)) = (point.is_null(), &r.point) {
                    std::ptr::copy_nonoverlapping(y.as_ptr(), point, len);
                }
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Membership of `y` (`len` entries). `inside` receives 1 or 0 and
/// `distance` the L1 distance to the image of the shadow. When the point is
/// outside and `ell` is non-null, `ell` (`len` entries) and `ell0` receive a
/// separating inequality `ellᵀy' ≥ ell0` valid on the shadow.
///
/// # Safety
/// Buffers must hold `len` doubles; scalar outputs must be valid or null
/// where documented.
#[no_mangle]
pub unsafe extern "C" fn qh_membership(
    s: *const QhShadow,
    y: *const f64,
    len: usize,
    inside: *mut c_int,
    distance: *mut f64,
    ell: *mut f64,
    ell0: *mut f64,
) -> QhStatus {
    guard(|| {
        let (Some(s), Some(y), false, false) = (s.as_ref(), slice(y, len), inside.is_null(), distance.is_null())
        else {
            return fail(QhStatus::NullPointer, "null argument");
        };
        if len != s.shadow.m() {
            return fail(QhStatus::Dimension, format!("point has {len} entries, expected {}", s.shadow.m()));
        }
        match membership(&s.shadow, y) {
            Ok(r) => {
                *inside = c_int::from(r.inside);
                *distance = r.distance;
                if let (Some(sep), false) = (&r.separator, ell.is_null()) {
                    std::ptr::copy_nonoverlapping(sep.ell.as_ptr(), ell, len);
                    if !ell0.is_null() {
                        *ell0 = sep.ell0;
                    }
                }
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
