//! C ABI over `hahn`. Elements are opaque `HfElem` handles owned by the
//! caller and released with `hf_elem_free`; strings returned through out
//! parameters are released with `hf_string_free`. Every entry point returns
//! an `HfStatus`; on failure `hf_last_error_message` describes the error.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hahn::cli::{eval_str, parse_set, print_terms, SessionConfig, Value};
use hahn::closure::is_til_closed;
use hahn::transseries::{Ctx, TransElem};
use hahn::Error;

/// Opaque transseries handle.
pub struct HfElem(TransElem);

/// Status codes; 1–5 match the exit codes of the `hahn` command.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    HfOk = 0,
    HfSyntax = 1,
    HfDomain = 2,
    HfBudget = 3,
    HfConstant = 4,
    HfDivision = 5,
    /// Null pointer or invalid UTF-8.
    HfInvalidArgument = 6,
    /// A bug: the library panicked.
    HfInternal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HfStatus {
    set_error(&e.to_string());
    match e.exit_code() {
        1 => HfStatus::HfSyntax,
        2 => HfStatus::HfDomain,
        3 => HfStatus::HfBudget,
        4 => HfStatus::HfConstant,
        _ => HfStatus::HfDivision,
    }
}

fn invalid(what: &str) -> HfStatus {
    set_error(what);
    HfStatus::HfInvalidArgument
}

fn guard(f: impl FnOnce() -> HfStatus) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal error");
            HfStatus::HfInternal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

unsafe fn emit(out: *mut *mut HfElem, r: hahn::Result<TransElem>) -> HfStatus {
    match r {
        Ok(e) => {
            *out = Box::into_raw(Box::new(HfElem(e)));
            HfStatus::HfOk
        }
        Err(e) => status_of(&e),
    }
}

fn ctx() -> Ctx {
    Ctx::default()
}

/// Message for the last failure on this thread. Valid until the next call
/// into this library from the same thread; never NULL.
#[no_mangle]
pub extern "C" fn hf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse and evaluate `expr` with default limits.
///
/// # Safety
/// `expr` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_eval(expr: *const c_char, out: *mut *mut HfElem) -> HfStatus {
    guard(|| {
        let Some(src) = str_arg(expr) else { return invalid("expr is NULL or not UTF-8") };
        if out.is_null() {
            return invalid("out is NULL");
        }
        let r = eval_str(src, &SessionConfig::default()).and_then(|v| match v {
            Value::Elem(e, _) => Ok(e),
            Value::Monos(..) => Err(Error::Domain("expression does not denote an element".into())),
        });
        emit(out, r)
    })
}

/// First `n_terms` terms as text, e.g. `1 + x^-1 + O(x^-2)`.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable. Free the result with
/// `hf_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hf_print(e: *const HfElem, n_terms: usize, out: *mut *mut c_char) -> HfStatus {
    guard(|| {
        if e.is_null() || out.is_null() {
            return invalid("NULL argument");
        }
        match print_terms(&(*e).0, n_terms, &ctx()) {
            Ok(s) => {
                *out = CString::new(s).map_or(ptr::null_mut(), CString::into_raw);
                HfStatus::HfOk
            }
            Err(err) => status_of(&err),
        }
    })
}

/// # Safety
/// `s` must come from this library and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn hf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `e` must come from this library and not have been freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn hf_elem_free(e: *mut HfElem) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

unsafe fn unary(e: *const HfElem, out: *mut *mut HfElem, f: impl FnOnce(&TransElem) -> hahn::Result<TransElem>) -> HfStatus {
    guard(|| {
        if e.is_null() || out.is_null() {
            return invalid("NULL argument");
        }
        emit(out, f(&(*e).0))
    })
}

unsafe fn binary(
    a: *const HfElem,
    b: *const HfElem,
    out: *mut *mut HfElem,
    f: impl FnOnce(&TransElem, &TransElem) -> TransElem,
) -> HfStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return invalid("NULL argument");
        }
        emit(out, Ok(f(&(*a).0, &(*b).0).normalize()))
    })
}

/// ∂ = x·d/dx
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_derive(e: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    unary(e, out, |e| e.derive().map(|d| d.normalize()))
}

/// Antiderivative with constant term 0.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_integrate(e: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    unary(e, out, |e| e.integrate(&ctx()))
}

/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_exp(e: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    unary(e, out, |e| e.exp(&ctx()))
}

/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_log(e: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    unary(e, out, |e| e.log(&ctx()))
}

/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_add(a: *const HfElem, b: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    binary(a, b, out, |a, b| a.add(b))
}

/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_mul(a: *const HfElem, b: *const HfElem, out: *mut *mut HfElem) -> HfStatus {
    binary(a, b, out, |a, b| a.mul(b))
}

/// TIL-closedness of a set given one expression per line.
///
/// # Safety
/// `set` must be a NUL-terminated string; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_check_til(set: *const c_char, verdict: *mut bool) -> HfStatus {
    guard(|| {
        let Some(src) = str_arg(set) else { return invalid("set is NULL or not UTF-8") };
        if verdict.is_null() {
            return invalid("verdict is NULL");
        }
        match parse_set(src, "ffi", &SessionConfig::default()).and_then(|s| is_til_closed(&s, &ctx())) {
            Ok(r) => {
                *verdict = r.verdict;
                HfStatus::HfOk
            }
            Err(e) => status_of(&e),
        }
    })
}
