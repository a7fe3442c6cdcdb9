//! C ABI over `rubbercodes`.
//!
//! Codes and verification reports are opaque handles created and freed by
//! the library. Big integers cross the boundary as decimal strings; strings
//! returned by the library must be released with [`rc_string_free`]. Every
//! fallible call returns an [`RcStatus`] and records a message readable
//! through [`rc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use num_bigint::BigUint;

use rubbercodes::bounds;
use rubbercodes::channel::{ChannelKind, Direction, ErrorPattern};
use rubbercodes::codec::{CodeParams, CodecError, Method, SkeletonSpace};
use rubbercodes::rubber::{round_trip, RubberError};
use rubbercodes::verify::{verify_exhaustive, Outcome, VerificationReport, VerifyError, VerifyOptions};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    OutOfRange = 3,
    /// Decoding returned the wrong message or none at all.
    DecodeFailed = 4,
    /// Exhaustive verification found a failing error pattern.
    Counterexample = 5,
    CapExceeded = 6,
    Internal = 7,
}

/// A code: method, parameters and skeleton space.
pub struct RcCode {
    params: CodeParams,
    space: SkeletonSpace,
}

/// Result of [`rc_verify`].
pub struct RcReport {
    report: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn fail(status: RcStatus, msg: impl ToString) -> RcStatus {
    set_error(msg);
    status
}

fn codec_status(e: &CodecError) -> RcStatus {
    match e {
        CodecError::IndexOutOfRange { .. } => RcStatus::OutOfRange,
        _ => RcStatus::InvalidArgument,
    }
}

fn rubber_status(e: &RubberError) -> RcStatus {
    match e {
        RubberError::Codec(c) => codec_status(c),
        RubberError::Inadmissible(_) | RubberError::PatternLength { .. } => RcStatus::InvalidArgument,
        RubberError::SymbolOutOfRange { .. } => RcStatus::OutOfRange,
        _ => RcStatus::DecodeFailed,
    }
}

fn verify_status(e: &VerifyError) -> RcStatus {
    match e {
        VerifyError::Codec(c) => codec_status(c),
        VerifyError::Rubber(r) => rubber_status(r),
        VerifyError::Channel(_) => RcStatus::InvalidArgument,
        VerifyError::CapExceeded { .. } | VerifyError::TooManyMessages(_) => RcStatus::CapExceeded,
    }
}

/// Runs `f`, turning panics into [`RcStatus::Internal`].
fn guard(f: impl FnOnce() -> RcStatus) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RcStatus::Internal, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, RcStatus> {
    if p.is_null() {
        return Err(fail(RcStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RcStatus::InvalidArgument, "string is not UTF-8"))
}

unsafe fn read_big(p: *const c_char) -> Result<BigUint, RcStatus> {
    let s = read_str(p)?;
    s.parse()
        .map_err(|_| fail(RcStatus::InvalidArgument, format!("`{s}` is not a non-negative integer")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn rc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a code. `method` is one of `rubber1`, `rubberr`, `modified`,
/// `lebedev`, `unidir`, `broken`. `r == 0` keeps the method's default run
/// length; `channel` may be null for the default channel, otherwise one of
/// `sym`, `z`, `invz`, `unidir`.
///
/// # Safety
/// `method` and a non-null `channel` must be NUL-terminated strings; `out`
/// must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn rc_code_new(
    method: *const c_char,
    q: usize,
    n: usize,
    t: usize,
    r: usize,
    z: usize,
    channel: *const c_char,
    out: *mut *mut RcCode,
) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return fail(RcStatus::NullPointer, "null output pointer");
        }
        let method: Method = match read_str(method).map(str::parse) {
            Ok(Ok(m)) => m,
            Ok(Err(e)) => return fail(RcStatus::InvalidArgument, e),
            Err(s) => return s,
        };
        let mut params = CodeParams::new(method, q, n, t).with_z(z);
        if r > 0 {
            params = params.with_r(r);
        }
        if !channel.is_null() {
            let token = match read_str(channel) {
                Ok(s) => s,
                Err(s) => return s,
            };
            match ChannelKind::from_token(token, q) {
                Some(kind) => params = params.on(kind),
                None => return fail(RcStatus::InvalidArgument, format!("unknown channel `{token}`")),
            }
        }
        match params.skeleton_space() {
            Ok(space) => {
                *out = Box::into_raw(Box::new(RcCode { params, space }));
                RcStatus::Ok
            }
            Err(e) => fail(codec_status(&e), e),
        }
    })
}

/// # Safety
/// `code` must be null or a handle from [`rc_code_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_code_free(code: *mut RcCode) {
    if !code.is_null() {
        drop(Box::from_raw(code));
    }
}

/// Number of messages, as a decimal string, or null on a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_code_capacity(code: *const RcCode) -> *mut c_char {
    match code.as_ref() {
        Some(c) => to_c(c.space.count().to_string()),
        None => {
            set_error("null code");
            ptr::null_mut()
        }
    }
}

/// Skeleton length, or 0 on a null handle.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_code_skeleton_len(code: *const RcCode) -> usize {
    code.as_ref().map_or(0, |c| c.space.length())
}

/// Writes the skeleton of message `index` (decimal) into `buf`, which must
/// hold exactly the skeleton length.
///
/// # Safety
/// `code` must be a live handle, `index` a NUL-terminated string and `buf`
/// valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rc_code_unrank(
    code: *const RcCode,
    index: *const c_char,
    buf: *mut u8,
    len: usize,
) -> RcStatus {
    guard(|| {
        let Some(c) = code.as_ref() else {
            return fail(RcStatus::NullPointer, "null code");
        };
        if buf.is_null() {
            return fail(RcStatus::NullPointer, "null buffer");
        }
        if len != c.space.length() {
            return fail(
                RcStatus::InvalidArgument,
                format!("buffer holds {len}, skeleton has {}", c.space.length()),
            );
        }
        let index = match read_big(index) {
            Ok(i) => i,
            Err(s) => return s,
        };
        match c.space.unrank(&index) {
            Ok(seq) => {
                slice::from_raw_parts_mut(buf, len).copy_from_slice(&seq);
                RcStatus::Ok
            }
            Err(e) => fail(codec_status(&e), e),
        }
    })
}

/// Message index of a skeleton, as a decimal string in `*out`.
///
/// # Safety
/// `code` must be a live handle, `seq` valid for `len` reads and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_code_rank(
    code: *const RcCode,
    seq: *const u8,
    len: usize,
    out: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let Some(c) = code.as_ref() else {
            return fail(RcStatus::NullPointer, "null code");
        };
        if out.is_null() || (seq.is_null() && len > 0) {
            return fail(RcStatus::NullPointer, "null pointer argument");
        }
        let seq = if len == 0 { &[][..] } else { slice::from_raw_parts(seq, len) };
        match c.space.rank(seq) {
            Ok(i) => {
                *out = to_c(i.to_string());
                RcStatus::Ok
            }
            Err(e) => fail(codec_status(&e), e),
        }
    })
}

/// Sends one block. Errors are given as `n_errors` zero-based positions
/// and the symbols received there; `up` picks the hidden direction for
/// unidirectional codes. The received word is written to `received` (n
/// symbols, may be null) and the decoded message to `*decoded` (may be
/// null). Returns [`RcStatus::DecodeFailed`] when decoding did not recover
/// the message.
///
/// # Safety
/// `code` must be a live handle, `message` a NUL-terminated string,
/// `positions` and `values` valid for `n_errors` reads, and non-null
/// `received` valid for n writes.
#[no_mangle]
pub unsafe extern "C" fn rc_transmit(
    code: *const RcCode,
    message: *const c_char,
    positions: *const usize,
    values: *const u8,
    n_errors: usize,
    up: bool,
    received: *mut u8,
    decoded: *mut *mut c_char,
) -> RcStatus {
    guard(|| {
        let Some(c) = code.as_ref() else {
            return fail(RcStatus::NullPointer, "null code");
        };
        if n_errors > 0 && (positions.is_null() || values.is_null()) {
            return fail(RcStatus::NullPointer, "null error arrays");
        }
        let message = match read_big(message) {
            Ok(m) => m,
            Err(s) => return s,
        };
        let overrides: Vec<(usize, u8)> = if n_errors == 0 {
            Vec::new()
        } else {
            slice::from_raw_parts(positions, n_errors)
                .iter()
                .copied()
                .zip(slice::from_raw_parts(values, n_errors).iter().copied())
                .collect()
        };
        let direction = if up { Direction::Up } else { Direction::Down };
        let pattern = match ErrorPattern::new(c.params.n, overrides, c.params.t) {
            Ok(p) => p.with_direction(direction),
            Err(e) => return fail(RcStatus::InvalidArgument, e),
        };
        let rt = match round_trip(&c.params, &message, &pattern) {
            Ok(rt) => rt,
            Err(e) => return fail(rubber_status(&e), e),
        };
        if !received.is_null() {
            slice::from_raw_parts_mut(received, c.params.n).copy_from_slice(&rt.transcript.received());
        }
        if !decoded.is_null() {
            *decoded = rt.decoded.as_ref().map_or(ptr::null_mut(), |m| to_c(m.to_string()));
        }
        match &rt.decoded {
            Ok(m) if *m == message => RcStatus::Ok,
            Ok(m) => fail(RcStatus::DecodeFailed, format!("decoded {m}, sent {message}")),
            Err(e) => fail(RcStatus::DecodeFailed, e),
        }
    })
}

/// Exhaustively checks every message against every adversary. A report is
/// written to `*out` both when the code verifies ([`RcStatus::Ok`]) and
/// when a counterexample is found ([`RcStatus::Counterexample`]).
/// `jobs == 0` means one thread; `cap == 0` uses the library default.
///
/// # Safety
/// `code` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_verify(
    code: *const RcCode,
    jobs: usize,
    cap: u64,
    out: *mut *mut RcReport,
) -> RcStatus {
    guard(|| {
        let Some(c) = code.as_ref() else {
            return fail(RcStatus::NullPointer, "null code");
        };
        if out.is_null() {
            return fail(RcStatus::NullPointer, "null output pointer");
        }
        let opts = VerifyOptions {
            jobs: jobs.max(1),
            cap: if cap == 0 { rubbercodes::verify::DEFAULT_CAP } else { cap },
        };
        match verify_exhaustive(&c.params, opts) {
            Ok(report) => {
                let status = if report.verified() { RcStatus::Ok } else { RcStatus::Counterexample };
                if status == RcStatus::Counterexample {
                    set_error("counterexample found");
                }
                *out = Box::into_raw(Box::new(RcReport { report }));
                status
            }
            Err(e) => fail(verify_status(&e), e),
        }
    })
}

/// # Safety
/// `report` must be null or a handle from [`rc_verify`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_report_free(report: *mut RcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_report_verified(report: *const RcReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.verified())
}

/// Leaves explored by the search.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_report_leaves(report: *const RcReport) -> u64 {
    report.as_ref().map_or(0, |r| r.report.leaves)
}

/// Leaves where an error turned a sent symbol into the rubber.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_report_towards_rubber_leaves(report: *const RcReport) -> u64 {
    report.as_ref().map_or(0, |r| r.report.towards_rubber_leaves)
}

/// Failing message index as a decimal string, or null when verified.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_report_counterexample_message(report: *const RcReport) -> *mut c_char {
    match report.as_ref().map(|r| &r.report.outcome) {
        Some(Outcome::Counterexample(cx)) => to_c(cx.message.to_string()),
        _ => ptr::null_mut(),
    }
}

/// Failing error pattern in the command-line `pos:sym,...` form (1-based
/// positions), or null when verified.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_report_counterexample_errors(report: *const RcReport) -> *mut c_char {
    match report.as_ref().map(|r| &r.report.outcome) {
        Some(Outcome::Counterexample(cx)) => to_c(cx.errors_spec()),
        _ => ptr::null_mut(),
    }
}

/// Rate of the multi-run modified rubber, best over `r` in `2..=r_max`.
#[no_mangle]
pub extern "C" fn rc_r_mr(tau: f64, q: usize, r_max: usize) -> f64 {
    bounds::r_mr(tau, q, r_max)
}

#[no_mangle]
pub extern "C" fn rc_rubber_rate(tau: f64, q: usize, r: usize) -> f64 {
    bounds::rubber_rate(tau, q, r)
}

#[no_mangle]
pub extern "C" fn rc_modified_rubber_rate(tau: f64, q: usize, r: usize) -> f64 {
    bounds::modified_rubber_rate(tau, q, r)
}

/// Largest root of the run-length characteristic polynomial.
#[no_mangle]
pub extern "C" fn rc_solve_z_r(q: usize, r: usize) -> f64 {
    bounds::solve_z_r(q, r)
}

#[no_mangle]
pub extern "C" fn rc_c2f_binary(tau: f64) -> f64 {
    bounds::c2f_binary(tau)
}

#[no_mangle]
pub extern "C" fn rc_adl_upper(tau: f64, q: usize) -> f64 {
    bounds::adl_upper(tau, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_statuses() {
        let e = CodecError::IndexOutOfRange { index: 5u8.into(), count: 5u8.into() };
        assert_eq!(codec_status(&e), RcStatus::OutOfRange);
        assert_eq!(rubber_status(&RubberError::Ambiguous(2)), RcStatus::DecodeFailed);
        let e = VerifyError::CapExceeded { bound: 10u8.into(), cap: 1 };
        assert_eq!(verify_status(&e), RcStatus::CapExceeded);
    }

    #[test]
    fn panics_become_internal() {
        assert_eq!(guard(|| panic!("boom")), RcStatus::Internal);
        let msg = unsafe { CStr::from_ptr(rc_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
