//! C ABI for jnlab.
//!
//! Sequences and verdicts are opaque handles owned by the caller and released
//! with their `_free` function. Every call returns a [`JnStatus`]; on failure
//! the message is kept per thread and can be fetched with
//! [`jn_last_error`]. Strings handed out by the library are released with
//! [`jn_string_free`]. Structured data crosses the boundary as JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use jnlab::cantor::Point;
use jnlab::cli::exec::execute;
use jnlab::cli::RunConfig;
use jnlab::jn::{
    comb_point, independent_sequence, scattered_jn, standard_sequence, uds_sequence, van_der_corput, MeasureSequence,
};
use jnlab::measures::FsMeasure;
use jnlab::verify::{self, Format, Verdict};
use jnlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    ConstructionError = 4,
    /// The call completed but the check it ran did not pass.
    VerificationFailed = 5,
    DepthExceeded = 6,
    Panic = 7,
}

/// A sequence of measures.
pub struct JnSequence(MeasureSequence);

/// The report of a weak*-check.
pub struct JnVerdict(Verdict);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(JnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => JnStatus::ParseError,
            Error::DepthExceeded { .. } => JnStatus::DepthExceeded,
            Error::InvalidArgument(_) | Error::Io(_) => JnStatus::InvalidArgument,
            _ => JnStatus::ConstructionError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes were removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<JnStatus, Failure>) -> JnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            JnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(JnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure(JnStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Failure(JnStatus::InvalidArgument, "output contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> Result<JnStatus, Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(JnStatus::Ok)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The string
/// belongs to the caller.
#[no_mangle]
pub extern "C" fn jn_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn jn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn jn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `2^-(n+1) Σ_s (δ_{s1^ω} − δ_{s0^ω})`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_standard(out: *mut *mut JnSequence) -> JnStatus {
    guard(|| write_handle(out, JnSequence(standard_sequence())))
}

/// Densities `±λ` on the cylinders fixed by bit `n`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_independent(out: *mut *mut JnSequence) -> JnStatus {
    guard(|| write_handle(out, JnSequence(independent_sequence())))
}

/// Normalized differences of empirical averages over the van der Corput
/// points, labelled from 1.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_van_der_corput(out: *mut *mut JnSequence) -> JnStatus {
    guard(|| {
        let seq = uds_sequence("van-der-corput", Arc::new(|k| Ok(van_der_corput(k as u64))), None);
        write_handle(out, JnSequence(seq))
    })
}

/// `½(δ_{0^n 1^ω} − δ_{0^ω})`, with convergence checked to `depth` bits over
/// `horizon` terms.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_comb(depth: u32, horizon: usize, out: *mut *mut JnSequence) -> JnStatus {
    guard(|| {
        let seq = scattered_jn(Arc::new(comb_point), Point::constant(false), depth, horizon)?;
        write_handle(out, JnSequence(seq))
    })
}

/// A finite sequence from a JSON array of measures, each
/// `{"atoms": [{"point": …, "weight": "p/q"}, …]}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_from_json(json: *const c_char, out: *mut *mut JnSequence) -> JnStatus {
    guard(|| {
        let terms: Vec<FsMeasure> = serde_json::from_str(read_str(json, "json")?).map_err(Error::from)?;
        write_handle(out, JnSequence(MeasureSequence::from_terms("ffi", serde_json::Value::Null, terms)))
    })
}

/// Term `i` as JSON.
///
/// # Safety
/// `seq` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_term_json(seq: *const JnSequence, i: usize, out: *mut *mut c_char) -> JnStatus {
    guard(|| {
        let seq = handle(seq, "sequence")?;
        let term = seq.0.term(i)?;
        write_string(out, serde_json::to_string(&term).map_err(Error::from)?)?;
        Ok(JnStatus::Ok)
    })
}

/// # Safety
/// `seq` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn jn_sequence_free(seq: *mut JnSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// fsJN check of the first `n_terms` terms: norms exactly 1 and, from the
/// middle of the range on, every cylinder of depth `<= depth` below `tol`
/// (a `"p/q"` string). Returns `VerificationFailed` with the verdict still
/// written when the check does not pass.
///
/// # Safety
/// `seq` must be a live handle, `tol` a nul-terminated string and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_check_fsjn(
    seq: *const JnSequence,
    depth: u32,
    n_terms: usize,
    tol: *const c_char,
    out: *mut *mut JnVerdict,
) -> JnStatus {
    guard(|| {
        let seq = handle(seq, "sequence")?;
        let tol = jnlab::rational::parse(read_str(tol, "tol")?)?;
        let verdict = verify::check_fsjn(&seq.0, depth, n_terms, &tol)?;
        let passed = verdict.passed();
        write_handle(out, JnVerdict(verdict))?;
        Ok(if passed { JnStatus::Ok } else { JnStatus::VerificationFailed })
    })
}

/// # Safety
/// `verdict` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_verdict_passed(verdict: *const JnVerdict, out: *mut bool) -> JnStatus {
    guard(|| {
        let v = handle(verdict, "verdict")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = v.0.passed();
        Ok(JnStatus::Ok)
    })
}

/// The verdict as JSON (`csv == false`) or as CSV rows.
///
/// # Safety
/// `verdict` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_verdict_render(verdict: *const JnVerdict, csv: bool, out: *mut *mut c_char) -> JnStatus {
    guard(|| {
        let v = handle(verdict, "verdict")?;
        let text = if csv { verify::to_csv(&v.0)? } else { verify::to_json(&v.0)? };
        write_string(out, text)?;
        Ok(JnStatus::Ok)
    })
}

/// # Safety
/// `verdict` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn jn_verdict_free(verdict: *mut JnVerdict) {
    if !verdict.is_null() {
        drop(Box::from_raw(verdict));
    }
}

/// Runs a command-line config (the JSON written next to `--out`) and
/// returns its artifact as JSON. The `out` field of the config is ignored.
/// Returns `VerificationFailed`, with the artifact written, when the
/// command's own check does not pass.
///
/// # Safety
/// `config` must be a nul-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn jn_run_config(config: *const c_char, out: *mut *mut c_char) -> JnStatus {
    guard(|| {
        let mut cfg: RunConfig = serde_json::from_str(read_str(config, "config")?).map_err(Error::from)?;
        cfg.out = None;
        let outcome = execute(&cfg)?;
        write_string(out, outcome.artifact.render(Format::Json)?)?;
        Ok(if outcome.passed == Some(false) { JnStatus::VerificationFailed } else { JnStatus::Ok })
    })
}
