use std::ffi::{CStr, CString};
use std::ptr;

use hahn_ffi::*;

fn eval(src: &str) -> Result<*mut HfElem, HfStatus> {
    let c = CString::new(src).unwrap();
    let mut out = ptr::null_mut();
    match unsafe { hf_eval(c.as_ptr(), &mut out) } {
        HfStatus::HfOk => Ok(out),
        s => Err(s),
    }
}

fn show(e: *const HfElem, n: usize) -> String {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { hf_print(e, n, &mut s) }, HfStatus::HfOk);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { hf_string_free(s) };
    text
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hf_last_error_message()) }.to_str().unwrap().to_owned()
}

#[test]
fn eval_and_print() {
    let e = eval("exp(x^-1)").unwrap();
    assert_eq!(show(e, 3), "1 + x^-1 + 1/2*x^-2 + O(x^-3)");
    unsafe { hf_elem_free(e) };
}

#[test]
fn operations_compose() {
    let x = eval("x").unwrap();
    let mut ex = ptr::null_mut();
    let mut d = ptr::null_mut();
    let mut prod = ptr::null_mut();
    let mut sum = ptr::null_mut();
    let mut back = ptr::null_mut();
    let mut i = ptr::null_mut();
    unsafe {
        assert_eq!(hf_exp(x, &mut ex), HfStatus::HfOk);
        assert_eq!(hf_derive(ex, &mut d), HfStatus::HfOk);
        assert_eq!(show(d, 4), "x*exp(x)");
        assert_eq!(hf_mul(x, ex, &mut prod), HfStatus::HfOk);
        assert_eq!(hf_add(prod, x, &mut sum), HfStatus::HfOk);
        assert_eq!(show(sum, 4), "x*exp(x) + x");
        assert_eq!(hf_log(ex, &mut back), HfStatus::HfOk);
        assert_eq!(show(back, 4), "x");
        assert_eq!(hf_integrate(ex, &mut i), HfStatus::HfOk);
        assert_eq!(show(i, 2), "x^-1*exp(x) + x^-2*exp(x) + O(x^-3*exp(x))");
        for h in [x, ex, d, prod, sum, back, i] {
            hf_elem_free(h);
        }
    }
}

#[test]
fn status_codes_match_exit_codes() {
    assert_eq!(eval("exp(x").unwrap_err(), HfStatus::HfSyntax);
    assert!(last_error().contains("1:6"));
    assert_eq!(eval("log(-x)").unwrap_err(), HfStatus::HfDomain);
    assert_eq!(eval("exp(exp(exp(exp(exp(x)))))").unwrap_err(), HfStatus::HfBudget);
    assert_eq!(eval("exp(1)").unwrap_err(), HfStatus::HfConstant);
    assert_eq!(eval("x/0").unwrap_err(), HfStatus::HfDivision);
    assert_eq!(eval("suppexp(x)").unwrap_err(), HfStatus::HfDomain);
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { hf_eval(ptr::null(), &mut out) }, HfStatus::HfInvalidArgument);
    assert_eq!(unsafe { hf_derive(ptr::null(), &mut out) }, HfStatus::HfInvalidArgument);
    unsafe {
        hf_elem_free(ptr::null_mut());
        hf_string_free(ptr::null_mut());
    }
}

#[test]
fn til_verdicts() {
    let mut v = true;
    let open = CString::new("exp(x + x^(1/2))\n").unwrap();
    assert_eq!(unsafe { hf_check_til(open.as_ptr(), &mut v) }, HfStatus::HfOk);
    assert!(!v);
    let closed = CString::new("exp(x + x^(1/2))\nx + x^(1/2)\nx\n0\n").unwrap();
    assert_eq!(unsafe { hf_check_til(closed.as_ptr(), &mut v) }, HfStatus::HfOk);
    assert!(v);
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hahn.h")).unwrap();
    assert!(h.contains("typedef struct HfElem HfElem;"));
    for f in [
        "hf_eval", "hf_print", "hf_string_free", "hf_elem_free", "hf_derive", "hf_integrate", "hf_exp", "hf_log",
        "hf_add", "hf_mul", "hf_check_til", "hf_last_error_message",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
}
