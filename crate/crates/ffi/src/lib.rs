//! C ABI for the seqsample toolkit.
//!
//! Every fallible function returns a [`SeqsampleStatus`] and writes its result
//! through an out-pointer. On failure a description is available from
//! [`seqsample_last_error`] on the same thread until the next failing call.
//! Sequential tests live behind the opaque [`SeqsampleSprt`] handle, created
//! by [`seqsample_sprt_new`] and released with [`seqsample_sprt_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use seqsample::plans::{
    acceptance_threshold, code_letter_size, lookup_plan, poisson_cdf, rejection_threshold, sample_size,
    z_half_alpha, CaseId, PlanParams,
};
use seqsample::sprt::{exact_performance, Observation, SprtConfig, SprtState, Verdict};
use seqsample::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqsampleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    PlanNotFound = 3,
    /// The sequential test has already reached a verdict.
    AlreadyDecided = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqsampleVerdict {
    Continue = 0,
    Accept = 1,
    Reject = 2,
    TruncatedAccept = 3,
    TruncatedReject = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqsampleCase {
    I = 1,
    II = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqsampleSprtState {
    pub n_seen: u64,
    pub defects: u64,
    pub log_lr: f64,
    pub verdict: SeqsampleVerdict,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqsamplePerformance {
    pub accept_prob: f64,
    pub reject_prob: f64,
    /// Expected number of items inspected.
    pub asn: f64,
}

/// Opaque sequential test: a configuration and its current state.
pub struct SeqsampleSprt {
    config: SprtConfig,
    state: SprtState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SeqsampleStatus {
    match err {
        Error::InvalidParameter { .. } | Error::UnknownCodeLetter(_) => SeqsampleStatus::InvalidParameter,
        Error::PlanNotFound { .. } => SeqsampleStatus::PlanNotFound,
        Error::SteppedAfterStop(_) => SeqsampleStatus::AlreadyDecided,
        _ => SeqsampleStatus::Internal,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), SeqsampleStatus>) -> SeqsampleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeqsampleStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            SeqsampleStatus::Internal
        }
    }
}

fn fail(err: Error) -> SeqsampleStatus {
    set_last_error(err.to_string());
    status_of(&err)
}

fn null(name: &str) -> SeqsampleStatus {
    set_last_error(format!("`{name}` is null"));
    SeqsampleStatus::NullPointer
}

/// Writes `value` through `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write<T>(out: *mut T, name: &str, value: T) -> Result<(), SeqsampleStatus> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn require<T>(out: *const T, name: &str) -> Result<(), SeqsampleStatus> {
    if out.is_null() {
        Err(null(name))
    } else {
        Ok(())
    }
}

fn verdict(v: Verdict) -> SeqsampleVerdict {
    match v {
        Verdict::Continue => SeqsampleVerdict::Continue,
        Verdict::Accept => SeqsampleVerdict::Accept,
        Verdict::Reject => SeqsampleVerdict::Reject,
        Verdict::TruncatedAccept => SeqsampleVerdict::TruncatedAccept,
        Verdict::TruncatedReject => SeqsampleVerdict::TruncatedReject,
    }
}

fn state_view(s: &SprtState) -> SeqsampleSprtState {
    SeqsampleSprtState {
        n_seen: s.n_seen,
        defects: s.defects,
        log_lr: s.log_lr,
        verdict: verdict(s.verdict),
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn seqsample_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn seqsample_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Sample size `ceil(z² p0 (1−p0) / δ²)`. Pass a NaN `z` to derive it from
/// `alpha` as the upper α/2 normal quantile.
///
/// # Safety
/// `out_n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sample_size(
    alpha: f64,
    p0: f64,
    delta: f64,
    z: f64,
    out_n: *mut u64,
) -> SeqsampleStatus {
    guard(|| {
        require(out_n, "out_n")?;
        let z = if z.is_nan() { z_half_alpha(alpha).map_err(fail)? } else { z };
        let params = PlanParams::new(alpha, p0, delta, z).map_err(fail)?;
        write(out_n, "out_n", sample_size(&params).map_err(fail)?)
    })
}

/// Smallest `k` with `P(X ≥ k) ≤ alpha` for X ~ Poisson(n·p0).
///
/// # Safety
/// `out_k` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_rejection_threshold(
    n: u64,
    p0: f64,
    alpha: f64,
    out_k: *mut u64,
) -> SeqsampleStatus {
    guard(|| {
        require(out_k, "out_k")?;
        write(out_k, "out_k", rejection_threshold(n, p0, alpha).map_err(fail)?.k_star)
    })
}

/// Smallest `k` with `P(X ≤ k−1) ≥ reliability` for X ~ Poisson(n·p0).
///
/// # Safety
/// `out_k` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_acceptance_threshold(
    n: u64,
    p0: f64,
    reliability: f64,
    out_k: *mut u64,
) -> SeqsampleStatus {
    guard(|| {
        require(out_k, "out_k")?;
        write(
            out_k,
            "out_k",
            acceptance_threshold(n, p0, reliability).map_err(fail)?.k_star,
        )
    })
}

/// `P(X ≤ k)` for X ~ Poisson(lambda).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_poisson_cdf(k: u64, lambda: f64, out: *mut f64) -> SeqsampleStatus {
    guard(|| {
        require(out, "out")?;
        write(out, "out", poisson_cdf(k, lambda).map_err(fail)?)
    })
}

/// Embedded plan-table cell. Blank cells return `PLAN_NOT_FOUND`.
///
/// # Safety
/// `out_n` and `out_c` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_lookup_plan(
    batch_size: u64,
    aql: f64,
    table: SeqsampleCase,
    out_n: *mut u64,
    out_c: *mut u64,
) -> SeqsampleStatus {
    guard(|| {
        require(out_n, "out_n")?;
        require(out_c, "out_c")?;
        let case = match table {
            SeqsampleCase::I => CaseId::CaseI,
            SeqsampleCase::II => CaseId::CaseII,
        };
        let cell = lookup_plan(batch_size, aql, case).map_err(fail)?;
        write(out_n, "out_n", cell.n)?;
        write(out_c, "out_c", cell.c)
    })
}

/// Sample size for a code letter (`A`–`R`, no `I` or `O`).
///
/// # Safety
/// `out_n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_code_letter_size(letter: c_char, out_n: *mut u64) -> SeqsampleStatus {
    guard(|| {
        require(out_n, "out_n")?;
        let ch = char::from(letter as u8);
        write(out_n, "out_n", code_letter_size(ch).map_err(fail)?)
    })
}

/// Creates a sequential test in its initial state.
///
/// # Safety
/// `out` must be valid for writes. The handle written there must be released
/// with [`seqsample_sprt_free`].
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_new(
    p0: f64,
    p1: f64,
    alpha: f64,
    beta: f64,
    n_max: u64,
    k_star: u64,
    out: *mut *mut SeqsampleSprt,
) -> SeqsampleStatus {
    guard(|| {
        require(out, "out")?;
        let config = SprtConfig::new(p0, p1, alpha, beta, n_max, k_star).map_err(fail)?;
        let handle = Box::new(SeqsampleSprt {
            config,
            state: SprtState::new(),
        });
        write(out, "out", Box::into_raw(handle))
    })
}

/// Records one inspected item (`defect` nonzero for a defective one). A test
/// that has already stopped returns `ALREADY_DECIDED` and is left unchanged.
///
/// # Safety
/// `handle` must come from [`seqsample_sprt_new`] and not be freed;
/// `out_state` may be null.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_step(
    handle: *mut SeqsampleSprt,
    defect: bool,
    out_state: *mut SeqsampleSprtState,
) -> SeqsampleStatus {
    guard(|| {
        let Some(h) = handle.as_mut() else {
            return Err(null("handle"));
        };
        let obs = if defect { Observation::Defect } else { Observation::Pass };
        h.state = h.state.step(&h.config, obs).map_err(fail)?;
        if !out_state.is_null() {
            out_state.write(state_view(&h.state));
        }
        Ok(())
    })
}

/// Current state of a sequential test.
///
/// # Safety
/// `handle` must be a live handle; `out_state` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_state(
    handle: *const SeqsampleSprt,
    out_state: *mut SeqsampleSprtState,
) -> SeqsampleStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return Err(null("handle"));
        };
        write(out_state, "out_state", state_view(&h.state))
    })
}

/// Wald boundaries `ln A` and `ln B` of the test.
///
/// # Safety
/// `handle` must be a live handle; both out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_boundaries(
    handle: *const SeqsampleSprt,
    out_log_a: *mut f64,
    out_log_b: *mut f64,
) -> SeqsampleStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return Err(null("handle"));
        };
        write(out_log_a, "out_log_a", h.config.log_a())?;
        write(out_log_b, "out_log_b", h.config.log_b())
    })
}

/// Exact acceptance probability, rejection probability and expected sample
/// count of the test when each item is defective with probability `true_p`.
///
/// # Safety
/// `handle` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_performance(
    handle: *const SeqsampleSprt,
    true_p: f64,
    out: *mut SeqsamplePerformance,
) -> SeqsampleStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return Err(null("handle"));
        };
        require(out, "out")?;
        let perf = exact_performance(&h.config, true_p).map_err(fail)?;
        write(
            out,
            "out",
            SeqsamplePerformance {
                accept_prob: perf.accept_prob,
                reject_prob: perf.reject_prob,
                asn: perf.asn,
            },
        )
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or come from [`seqsample_sprt_new`], and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn seqsample_sprt_free(handle: *mut SeqsampleSprt) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
