//! C ABI over the `aalkit` library.
//!
//! Every function returns an [`AalStatus`]. On anything other than
//! `AAL_STATUS_OK` or `AAL_STATUS_FAIL`, [`aal_last_error`] describes the
//! problem. Handles are opaque and must be released with their `_free`
//! function. Strings handed out by the library are released with
//! [`aal_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aalkit::cring::{cr_valid, normalize};
use aalkit::finalg::{is_model, leibniz_congruence, FiniteAlgebra, LogicalMatrix};
use aalkit::hilbert::HilbertCalculus;
use aalkit::terms::{parse_term, Equation, Signature};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AalStatus {
    Ok = 0,
    Fail = 1,
    NullPointer = 2,
    InvalidUtf8 = 3,
    Parse = 4,
    Guard = 5,
    Invalid = 6,
    Panic = 7,
}

/// A finite algebra.
pub struct AalAlgebra(FiniteAlgebra);

/// An algebra with a designated filter.
pub struct AalMatrix(LogicalMatrix);

/// A Hilbert calculus.
pub struct AalCalculus(HilbertCalculus);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(AalStatus, String);

impl From<aalkit::Error> for Failure {
    fn from(e: aalkit::Error) -> Self {
        use aalkit::Error as E;
        let status = match e {
            E::Syntax { .. } | E::UnknownSymbol { .. } | E::Arity { .. } => AalStatus::Parse,
            E::Guard { .. } | E::ResourceLimit(_) => AalStatus::Guard,
            _ => AalStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = std::result::Result<AalStatus, Failure>;

fn guarded(f: impl FnOnce() -> Outcome) -> AalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside aalkit");
            AalStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AalStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> std::result::Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AalStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> std::result::Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> std::result::Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Message for the most recent error on this thread. Valid until the next
/// call into the library from the same thread.
#[no_mangle]
pub extern "C" fn aal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn aal_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an algebra in the `carrier`/`op` table format.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out_algebra` writable.
#[no_mangle]
pub unsafe extern "C" fn aal_algebra_parse(src: *const c_char, out_algebra: *mut *mut AalAlgebra) -> AalStatus {
    guarded(|| {
        let slot = out(out_algebra, "out_algebra")?;
        *slot = ptr::null_mut();
        let a = FiniteAlgebra::parse(text(src, "src")?)?;
        *slot = Box::into_raw(Box::new(AalAlgebra(a)));
        Ok(AalStatus::Ok)
    })
}

/// # Safety
/// `algebra` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aal_algebra_free(algebra: *mut AalAlgebra) {
    if !algebra.is_null() {
        drop(Box::from_raw(algebra));
    }
}

/// # Safety
/// `algebra` must be a live handle and `out_size` writable.
#[no_mangle]
pub unsafe extern "C" fn aal_algebra_size(algebra: *const AalAlgebra, out_size: *mut usize) -> AalStatus {
    guarded(|| {
        *out(out_size, "out_size")? = handle(algebra, "algebra")?.0.size();
        Ok(AalStatus::Ok)
    })
}

/// Builds a matrix from a copy of `algebra` and the `len` elements at `filter`.
///
/// # Safety
/// `filter` must point to `len` readable values (it may be null when `len`
/// is zero) and `out_matrix` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aal_matrix_new(
    algebra: *const AalAlgebra,
    filter: *const usize,
    len: usize,
    out_matrix: *mut *mut AalMatrix,
) -> AalStatus {
    guarded(|| {
        let slot = out(out_matrix, "out_matrix")?;
        *slot = ptr::null_mut();
        let a = handle(algebra, "algebra")?.0.clone();
        let elems: &[usize] = match (filter.is_null(), len) {
            (_, 0) => &[],
            (true, _) => return Err(null("filter")),
            (false, n) => std::slice::from_raw_parts(filter, n),
        };
        let m = LogicalMatrix::new(a, elems)?;
        *slot = Box::into_raw(Box::new(AalMatrix(m)));
        Ok(AalStatus::Ok)
    })
}

/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aal_matrix_free(matrix: *mut AalMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Writes the Leibniz congruence of `matrix` as block labels, one per
/// element, numbered by first occurrence. `labels` must have room for the
/// carrier size; `out_blocks` receives the number of blocks.
///
/// # Safety
/// `labels` must point to `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn aal_leibniz(
    matrix: *const AalMatrix,
    labels: *mut usize,
    capacity: usize,
    out_blocks: *mut usize,
) -> AalStatus {
    guarded(|| {
        let m = &handle(matrix, "matrix")?.0;
        let blocks = out(out_blocks, "out_blocks")?;
        let found = leibniz_congruence(m).labels();
        if labels.is_null() {
            return Err(null("labels"));
        }
        if capacity < found.len() {
            return Err(Failure(
                AalStatus::Invalid,
                format!("labels needs room for {} values, got {capacity}", found.len()),
            ));
        }
        std::slice::from_raw_parts_mut(labels, found.len()).copy_from_slice(&found);
        *blocks = found.iter().max().map_or(0, |k| k + 1);
        Ok(AalStatus::Ok)
    })
}

/// `AAL_STATUS_OK` when the Leibniz congruence is the identity, else
/// `AAL_STATUS_FAIL`.
///
/// # Safety
/// `matrix` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aal_matrix_is_reduced(matrix: *const AalMatrix) -> AalStatus {
    guarded(|| {
        let m = &handle(matrix, "matrix")?.0;
        Ok(if leibniz_congruence(m).is_identity() {
            AalStatus::Ok
        } else {
            AalStatus::Fail
        })
    })
}

/// Parses a calculus. `signature` is a `symbol arity` per line listing; when
/// null the commutative-ring signature is used.
///
/// # Safety
/// `src` must be a NUL-terminated string, `signature` null or one, and
/// `out_calculus` writable.
#[no_mangle]
pub unsafe extern "C" fn aal_calculus_parse(
    src: *const c_char,
    signature: *const c_char,
    out_calculus: *mut *mut AalCalculus,
) -> AalStatus {
    guarded(|| {
        let slot = out(out_calculus, "out_calculus")?;
        *slot = ptr::null_mut();
        let sig = if signature.is_null() {
            Signature::ring()
        } else {
            Signature::parse("ffi", text(signature, "signature")?)?
        };
        let c = HilbertCalculus::parse(text(src, "src")?, sig)?;
        *slot = Box::into_raw(Box::new(AalCalculus(c)));
        Ok(AalStatus::Ok)
    })
}

/// # Safety
/// `calculus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aal_calculus_free(calculus: *mut AalCalculus) {
    if !calculus.is_null() {
        drop(Box::from_raw(calculus));
    }
}

/// `AAL_STATUS_OK` when the filter of `matrix` is closed under every rule,
/// `AAL_STATUS_FAIL` otherwise.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn aal_is_model(calculus: *const AalCalculus, matrix: *const AalMatrix) -> AalStatus {
    guarded(|| {
        let c = &handle(calculus, "calculus")?.0;
        let m = &handle(matrix, "matrix")?.0;
        let report = is_model(c, m)?;
        Ok(match report.failure {
            None => AalStatus::Ok,
            Some(f) => {
                set_error(format!("{f:?}"));
                AalStatus::Fail
            }
        })
    })
}

/// Normal form of a ring term as a polynomial. Free the result with
/// [`aal_string_free`].
///
/// # Safety
/// `term` must be a NUL-terminated string and `out_text` writable.
#[no_mangle]
pub unsafe extern "C" fn aal_normalize(term: *const c_char, out_text: *mut *mut c_char) -> AalStatus {
    guarded(|| {
        let slot = out(out_text, "out_text")?;
        *slot = ptr::null_mut();
        let t = parse_term(text(term, "term")?, &Signature::ring())?;
        *slot = c_string(normalize(&t)?.to_string());
        Ok(AalStatus::Ok)
    })
}

/// `AAL_STATUS_OK` when `lhs = rhs` holds in every commutative ring,
/// `AAL_STATUS_FAIL` otherwise.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn aal_cr_valid(lhs: *const c_char, rhs: *const c_char) -> AalStatus {
    guarded(|| {
        let sig = Signature::ring();
        let l = parse_term(text(lhs, "lhs")?, &sig)?;
        let r = parse_term(text(rhs, "rhs")?, &sig)?;
        Ok(if cr_valid(&Equation::new(l, r))? {
            AalStatus::Ok
        } else {
            AalStatus::Fail
        })
    })
}

/// Runs the command-line tool in-process. `argv` excludes the program name.
/// The report goes to `out_report` (free with [`aal_string_free`]) and the
/// exit status to `out_exit`.
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn aal_run(
    argc: usize,
    argv: *const *const c_char,
    out_report: *mut *mut c_char,
    out_exit: *mut i32,
) -> AalStatus {
    guarded(|| {
        let report = out(out_report, "out_report")?;
        *report = ptr::null_mut();
        let exit = out(out_exit, "out_exit")?;
        let mut args = vec!["aalkit".to_string()];
        if argc > 0 {
            if argv.is_null() {
                return Err(null("argv"));
            }
            for &a in std::slice::from_raw_parts(argv, argc) {
                args.push(text(a, "argv[i]")?.to_string());
            }
        }
        let outcome = aalkit::cli::run(args);
        *exit = outcome.status;
        *report = c_string(outcome.report);
        Ok(AalStatus::Ok)
    })
}
