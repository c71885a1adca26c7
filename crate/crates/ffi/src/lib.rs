//! C interface to `brjuno-core`.
//!
//! Numbers are opaque [`BrjunoNumber`] handles built from the same text
//! grammar as the command line (`golden`, `p/q`, `tau:4`, `rand:7:60`, …).
//! Every function returns a [`BrjunoStatus`]; on failure the message is
//! available from [`brjuno_last_error`] on the calling thread until the next
//! call. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use brjuno_core::brjuno::{eval_b, eval_btilde, functional_equation_parts};
use brjuno_core::cf::ratio;
use brjuno_core::quadrature::{haar_cwt, integrate_b, Interval};
use brjuno_core::regularity::estimate_p_exponent;
use brjuno_core::xspec::{self, XSpec};
use brjuno_core::Error;

/// Result of every call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrjunoStatus {
    Ok = 0,
    /// Argument outside the mathematical domain.
    Domain = 1,
    /// A rational where an irrational is required.
    RationalInput = 2,
    /// Partial quotient index past the end of a finite expansion.
    Exhausted = 3,
    /// Precision, depth or evaluation budget exhausted.
    Resource = 4,
    /// A fit had too few usable scales.
    Estimation = 5,
    /// Malformed number text.
    Parse = 6,
    /// A required pointer argument was null.
    NullPointer = 7,
    /// A value does not fit the C output type.
    Overflow = 8,
    /// Internal failure; the library state is unaffected.
    Panic = 9,
}

/// Opaque number handle. Create with [`brjuno_number_parse`], release with
/// [`brjuno_number_free`].
pub struct BrjunoNumber {
    spec: XSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BrjunoStatus {
    match e {
        Error::Domain(_) => BrjunoStatus::Domain,
        Error::RationalInput(_) => BrjunoStatus::RationalInput,
        Error::Exhausted { .. } => BrjunoStatus::Exhausted,
        Error::Resource { .. } => BrjunoStatus::Resource,
        Error::Estimation(_) => BrjunoStatus::Estimation,
        Error::Parse(_) => BrjunoStatus::Parse,
    }
}

/// Runs `f`, recording the error message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), (BrjunoStatus, String)>) -> BrjunoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BrjunoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BrjunoStatus::Panic
        }
    }
}

fn core(e: Error) -> (BrjunoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BrjunoStatus, String) {
    (BrjunoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(n: *const BrjunoNumber) -> Result<&'a BrjunoNumber, (BrjunoStatus, String)> {
    n.as_ref().ok_or_else(|| null("number handle"))
}

unsafe fn write<T>(out: *mut T, v: T) {
    if !out.is_null() {
        *out = v;
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn brjuno_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn brjuno_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses `text` into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_number_parse(text: *const c_char, out: *mut *mut BrjunoNumber) -> BrjunoStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (BrjunoStatus::Parse, "text is not UTF-8".to_string()))?;
        let spec = xspec::parse(s).map_err(core)?;
        *out = Box::into_raw(Box::new(BrjunoNumber { spec }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `n` must come from [`brjuno_number_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn brjuno_number_free(n: *mut BrjunoNumber) {
    if !n.is_null() {
        drop(Box::from_raw(n));
    }
}

/// Whether the handle holds a rational. Writes 1 or 0.
///
/// # Safety
/// `n` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_number_is_rational(n: *const BrjunoNumber, out: *mut i32) -> BrjunoStatus {
    guard(|| {
        let n = handle(n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = i32::from(n.spec.number.is_rational());
        Ok(())
    })
}

/// Partial quotient `a_index` (1-based) of the fractional part.
///
/// # Safety
/// `n` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_number_quotient(n: *const BrjunoNumber, index: usize, out: *mut u64) -> BrjunoStatus {
    guard(|| {
        let n = handle(n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if index == 0 {
            return Err((BrjunoStatus::Domain, "quotient indices start at 1".into()));
        }
        let a = n.spec.number.quotient(index).map_err(core)?.ok_or_else(|| {
            (
                BrjunoStatus::Exhausted,
                format!("expansion ends before index {index}"),
            )
        })?;
        *out = u64::try_from(a).map_err(|_| (BrjunoStatus::Overflow, format!("a_{index} = {a} exceeds 64 bits")))?;
        Ok(())
    })
}

/// `B(x)` of an irrational handle to absolute accuracy `tol`. `tail_bound`
/// may be null.
///
/// # Safety
/// `n` must be a live handle; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn brjuno_eval_b(
    n: *const BrjunoNumber,
    tol: f64,
    value: *mut f64,
    tail_bound: *mut f64,
) -> BrjunoStatus {
    guard(|| {
        let n = handle(n)?;
        if value.is_null() {
            return Err(null("value"));
        }
        let e = eval_b(&n.spec.number, tol).map_err(core)?;
        *value = e.value;
        write(tail_bound, e.tail_bound);
        Ok(())
    })
}

/// Residual of the functional equation at an irrational handle.
///
/// # Safety
/// `n` must be a live handle and `residual` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_functional_residual(
    n: *const BrjunoNumber,
    tol: f64,
    residual: *mut f64,
) -> BrjunoStatus {
    guard(|| {
        let n = handle(n)?;
        if residual.is_null() {
            return Err(null("residual"));
        }
        *residual = functional_equation_parts(&n.spec.number, tol).map_err(core)?.residual;
        Ok(())
    })
}

/// Exact finite sum `B̃(p/q)` for `0 < p/q < 1`.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_eval_btilde(p: u64, q: u64, value: *mut f64) -> BrjunoStatus {
    guard(|| {
        if value.is_null() {
            return Err(null("value"));
        }
        if q == 0 {
            return Err((BrjunoStatus::Domain, "zero denominator".into()));
        }
        *value = eval_btilde(&ratio(p, q)).map_err(core)?;
        Ok(())
    })
}

/// `∫_lo^hi B` to tolerance `tol`. `error_estimate` and `converged` may be
/// null. `converged` is set to 0 when the evaluation budget ran out first;
/// the call still succeeds and `error_estimate` is then above `tol`.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_integrate_b(
    lo: f64,
    hi: f64,
    tol: f64,
    value: *mut f64,
    error_estimate: *mut f64,
    converged: *mut i32,
) -> BrjunoStatus {
    guard(|| {
        if value.is_null() {
            return Err(null("value"));
        }
        let i = Interval::from_f64(lo, hi).map_err(core)?;
        let r = integrate_b(&i, tol).map_err(core)?;
        *value = r.value;
        write(error_estimate, r.error_estimate);
        write(converged, i32::from(r.converged));
        Ok(())
    })
}

/// Haar wavelet coefficient of `B` at scale `a` and position `p/q`.
/// `error_estimate` may be null.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_haar_cwt(
    a: f64,
    p: u64,
    q: u64,
    value: *mut f64,
    error_estimate: *mut f64,
) -> BrjunoStatus {
    guard(|| {
        if value.is_null() {
            return Err(null("value"));
        }
        if q == 0 {
            return Err((BrjunoStatus::Domain, "zero denominator".into()));
        }
        let r = haar_cwt(a, &ratio(p, q)).map_err(core)?;
        *value = r.value;
        write(error_estimate, r.error_estimate);
        Ok(())
    })
}

/// Log-log slope of the p-oscillation over radii `2^-jmin … 2^-jmax`.
/// `r_squared` may be null.
///
/// # Safety
/// `n` must be a live handle and `slope` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn brjuno_p_exponent(
    n: *const BrjunoNumber,
    p: f64,
    jmin: i32,
    jmax: i32,
    slope: *mut f64,
    r_squared: *mut f64,
) -> BrjunoStatus {
    guard(|| {
        let n = handle(n)?;
        if slope.is_null() {
            return Err(null("slope"));
        }
        let e = estimate_p_exponent(&n.spec.number, p, jmin, jmax).map_err(core)?;
        *slope = e.slope;
        write(r_squared, e.r_squared);
        Ok(())
    })
}
