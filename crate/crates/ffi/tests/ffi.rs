use std::ffi::{c_char, CStr, CString};
use std::ptr;

use aalkit_ffi::*;

const Z3: &str = "carrier 3\nop and 2\n0 1 2\n1 2 0\n2 0 1\n";
const CONST2: &str = "carrier 2\nop and 2\n0 0\n0 0\n";
const SEMILATTICE: &str = "S1 : x <-> (and x x)\nS2 : (and x y) <-> (and y x)\nS3 : (and x (and y z)) <-> (and (and x y) z)\n";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(aal_last_error()) }.to_string_lossy().into_owned()
}

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_string_lossy().into_owned();
    unsafe { aal_string_free(s) };
    out
}

fn algebra(src: &str) -> *mut AalAlgebra {
    let mut a = ptr::null_mut();
    let src = c(src);
    assert_eq!(unsafe { aal_algebra_parse(src.as_ptr(), &mut a) }, AalStatus::Ok, "{}", last_error());
    a
}

fn matrix(a: *const AalAlgebra, filter: &[usize]) -> *mut AalMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { aal_matrix_new(a, filter.as_ptr(), filter.len(), &mut m) }, AalStatus::Ok);
    m
}

#[test]
fn leibniz_of_z3() {
    let a = algebra(Z3);
    let mut n = 0;
    assert_eq!(unsafe { aal_algebra_size(a, &mut n) }, AalStatus::Ok);
    assert_eq!(n, 3);
    let m = matrix(a, &[1, 2]);
    let mut labels = [99usize; 3];
    let mut blocks = 0;
    assert_eq!(unsafe { aal_leibniz(m, labels.as_mut_ptr(), labels.len(), &mut blocks) }, AalStatus::Ok);
    assert_eq!(labels, [0, 1, 2]);
    assert_eq!(blocks, 3);
    assert_eq!(unsafe { aal_matrix_is_reduced(m) }, AalStatus::Ok);
    unsafe {
        aal_matrix_free(m);
        aal_algebra_free(a);
    }
}

#[test]
fn collapsing_matrix_is_not_reduced() {
    let a = algebra(CONST2);
    let m = matrix(a, &[]);
    let mut labels = [0usize; 2];
    let mut blocks = 0;
    assert_eq!(unsafe { aal_leibniz(m, labels.as_mut_ptr(), 2, &mut blocks) }, AalStatus::Ok);
    assert_eq!((labels, blocks), ([0, 0], 1));
    assert_eq!(unsafe { aal_matrix_is_reduced(m) }, AalStatus::Fail);
    let mut small = [0usize; 1];
    assert_eq!(unsafe { aal_leibniz(m, small.as_mut_ptr(), 1, &mut blocks) }, AalStatus::Invalid);
    unsafe {
        aal_matrix_free(m);
        aal_algebra_free(a);
    }
}

#[test]
fn model_checking() {
    let a = algebra(Z3);
    let src = c(SEMILATTICE);
    let sig = c("and 2\n");
    let mut calc = ptr::null_mut();
    assert_eq!(unsafe { aal_calculus_parse(src.as_ptr(), sig.as_ptr(), &mut calc) }, AalStatus::Ok, "{}", last_error());
    let m = matrix(a, &[1, 2]);
    assert_eq!(unsafe { aal_is_model(calc, m) }, AalStatus::Ok);
    let m1 = matrix(a, &[1]);
    assert_eq!(unsafe { aal_is_model(calc, m1) }, AalStatus::Fail);
    assert!(!last_error().is_empty());
    unsafe {
        aal_matrix_free(m);
        aal_matrix_free(m1);
        aal_calculus_free(calc);
        aal_algebra_free(a);
    }
}

#[test]
fn ring_normal_forms() {
    let t = c("(+ x (- x))");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { aal_normalize(t.as_ptr(), &mut out) }, AalStatus::Ok);
    assert_eq!(take(out), "0");
    let (l, r) = (c("(* x (+ y 1))"), c("(+ (* y x) x)"));
    assert_eq!(unsafe { aal_cr_valid(l.as_ptr(), r.as_ptr()) }, AalStatus::Ok);
    let r2 = c("(+ (* y x) 1)");
    assert_eq!(unsafe { aal_cr_valid(l.as_ptr(), r2.as_ptr()) }, AalStatus::Fail);
}

#[test]
fn errors_are_reported() {
    let bad = c("(+ x");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { aal_normalize(bad.as_ptr(), &mut out) }, AalStatus::Parse);
    assert!(out.is_null());
    assert!(last_error().contains("syntax"), "{}", last_error());

    assert_eq!(unsafe { aal_normalize(ptr::null(), &mut out) }, AalStatus::NullPointer);
    let t = c("x");
    assert_eq!(unsafe { aal_normalize(t.as_ptr(), ptr::null_mut()) }, AalStatus::NullPointer);

    let bytes = [0xffu8, 0];
    assert_eq!(unsafe { aal_normalize(bytes.as_ptr().cast(), &mut out) }, AalStatus::InvalidUtf8);

    let mut a = ptr::null_mut();
    let src = c("carrier 2\nop and 2\n0 1\n");
    assert_ne!(unsafe { aal_algebra_parse(src.as_ptr(), &mut a) }, AalStatus::Ok);
    assert!(a.is_null());

    let z3 = algebra(Z3);
    let mut m = ptr::null_mut();
    let filter = [7usize];
    assert_eq!(unsafe { aal_matrix_new(z3, filter.as_ptr(), 1, &mut m) }, AalStatus::Invalid);
    assert_eq!(unsafe { aal_matrix_new(z3, ptr::null(), 1, &mut m) }, AalStatus::NullPointer);
    unsafe { aal_algebra_free(z3) };
    assert_eq!(unsafe { aal_matrix_is_reduced(ptr::null()) }, AalStatus::NullPointer);
    unsafe {
        aal_algebra_free(ptr::null_mut());
        aal_string_free(ptr::null_mut());
    }
}

#[test]
fn run_matches_cli() {
    let args: Vec<CString> = ["normalize", "(+ x (- x))"].iter().map(|s| c(s)).collect();
    let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let mut exit = -1;
    assert_eq!(unsafe { aal_run(argv.len(), argv.as_ptr(), &mut report, &mut exit) }, AalStatus::Ok);
    assert_eq!(exit, 0);
    assert!(take(report).starts_with("RESULT: PASS\n"));

    let args = [c("no-such-command")];
    let argv = [args[0].as_ptr()];
    assert_eq!(unsafe { aal_run(1, argv.as_ptr(), &mut report, &mut exit) }, AalStatus::Ok);
    assert_eq!(exit, 2);
    assert!(take(report).starts_with("RESULT: ERROR\n"));
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(aal_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/aalkit.h")).unwrap();
    for f in [
        "aal_last_error",
        "aal_version",
        "aal_string_free",
        "aal_algebra_parse",
        "aal_algebra_free",
        "aal_algebra_size",
        "aal_matrix_new",
        "aal_matrix_free",
        "aal_leibniz",
        "aal_matrix_is_reduced",
        "aal_calculus_parse",
        "aal_calculus_free",
        "aal_is_model",
        "aal_normalize",
        "aal_cr_valid",
        "aal_run",
    ] {
        let declared = [format!(" {f}("), format!("*{f}(")].iter().any(|d| header.contains(d.as_str()));
        assert!(declared, "{f} missing from header");
    }
    assert!(header.contains("typedef struct AalMatrix AalMatrix;"));
    assert!(header.contains("AAL_STATUS_PANIC = 7"));
}
