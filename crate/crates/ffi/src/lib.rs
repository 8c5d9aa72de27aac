//! C ABI for the compacttag library.
//!
//! Every fallible call returns a [`CtStatus`]; on failure a message is kept
//! per thread and can be read with [`ct_last_error_message`]. Runners are
//! opaque handles created by [`ct_runner_new`] and released with
//! [`ct_runner_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use compacttag::cli::op_scope;
use compacttag::dealer::{plan_matmul_trunc, Dealer};
use compacttag::metrics::{formula_baseline_tag, formula_compact_tag, formula_tag_ratio, Protocol};
use compacttag::protocol::{Session, SessionConfig};
use compacttag::transport::AdversarySpec;
use compacttag::{Error, RingParams};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    /// A MAC or checksum check failed, or a party equivocated.
    ProtocolAbort = 4,
    MissingMaterial = 5,
    Internal = 6,
}

/// Values accepted for the `protocol` argument of [`ct_runner_matmul`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtProtocol {
    Baseline = 0,
    CompactTag = 1,
}

/// Party 1's counters for one multiply-then-truncate.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CtStats {
    pub tag_mults: u64,
    pub trunc_tag_mults: u64,
    pub value_mults: u64,
    pub broadcast_elements: u64,
    pub broadcast_bytes: u64,
}

/// Opaque simulation context: ring parameters, party count, seed stream and
/// an optional adversary.
pub struct CtRunner {
    params: RingParams,
    parties: usize,
    seed: u64,
    runs: u64,
    adversary: AdversarySpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CtStatus {
    match e {
        Error::Abort { .. } => CtStatus::ProtocolAbort,
        Error::ShapeMismatch(_) => CtStatus::ShapeMismatch,
        Error::MissingMaterial(_) => CtStatus::MissingMaterial,
        Error::Desync(_) | Error::Ordering(_) | Error::Io(_) => CtStatus::Internal,
        _ => CtStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> CtStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

/// Runs `f`, turning panics into `Internal`.
fn guarded(f: impl FnOnce() -> CtStatus) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            CtStatus::Internal
        }
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// 3*T1*T2*T3 + T1*T3
#[no_mangle]
pub extern "C" fn ct_formula_baseline_tag(t1: u64, t2: u64, t3: u64) -> u64 {
    formula_baseline_tag(t1, t2, t3)
}

/// 4*T1*T3 + 2*T2*T3 + 3*T1*T2 + T1
#[no_mangle]
pub extern "C" fn ct_formula_compact_tag(t1: u64, t2: u64, t3: u64) -> u64 {
    formula_compact_tag(t1, t2, t3)
}

#[no_mangle]
pub extern "C" fn ct_formula_tag_ratio(t1: u64, t2: u64, t3: u64) -> f64 {
    formula_tag_ratio(t1, t2, t3)
}

/// Creates a runner. Writes the handle to `*out` on success.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ct_runner_new(
    k: u32,
    s: u32,
    f: u32,
    parties: usize,
    seed: u64,
    out: *mut *mut CtRunner,
) -> CtStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is NULL".into());
            return CtStatus::NullPointer;
        }
        let params = match RingParams::new(k, s, f) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        if parties < 2 {
            return fail(Error::TooFewParties(parties));
        }
        let r = Box::new(CtRunner { params, parties, seed, runs: 0, adversary: AdversarySpec::honest() });
        // SAFETY: checked non-null; caller guarantees it is writable.
        unsafe { *out = Box::into_raw(r) };
        CtStatus::Ok
    })
}

/// Releases a runner. NULL is ignored.
///
/// # Safety
/// `runner` must come from [`ct_runner_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ct_runner_free(runner: *mut CtRunner) {
    if !runner.is_null() {
        // SAFETY: pointer came from Box::into_raw in ct_runner_new.
        drop(unsafe { Box::from_raw(runner) });
    }
}

/// Installs an adversary from its JSON description; NULL restores an
/// honest run.
///
/// # Safety
/// `runner` must be a live handle; `json` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ct_runner_set_adversary_json(runner: *mut CtRunner, json: *const c_char) -> CtStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or NULL.
        let Some(r) = (unsafe { runner.as_mut() }) else {
            set_error("runner is NULL".into());
            return CtStatus::NullPointer;
        };
        if json.is_null() {
            r.adversary = AdversarySpec::honest();
            return CtStatus::Ok;
        }
        // SAFETY: caller guarantees NUL termination.
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return fail(Error::Adversary("not UTF-8".into())),
        };
        match AdversarySpec::from_json(text).and_then(|a| a.validate(r.parties).map(|_| a)) {
            Ok(a) => {
                r.adversary = a;
                CtStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Secret-shares X (t1 x t2) and Y (t2 x t3), row-major signed integers
/// (fixed point with f fractional bits), computes trunc(X * Y / 2^f) with
/// the chosen protocol, runs all checks and writes the opened t1 x t3
/// result to `out`. `stats` may be NULL.
///
/// # Safety
/// `x`, `y` and `out` must point to t1*t2, t2*t3 and t1*t3 elements;
/// `runner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_runner_matmul(
    runner: *mut CtRunner,
    protocol: u32,
    t1: usize,
    t2: usize,
    t3: usize,
    x: *const i64,
    y: *const i64,
    out: *mut i64,
    stats: *mut CtStats,
) -> CtStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or NULL.
        let Some(r) = (unsafe { runner.as_mut() }) else {
            set_error("runner is NULL".into());
            return CtStatus::NullPointer;
        };
        if x.is_null() || y.is_null() || out.is_null() {
            set_error("x, y and out must not be NULL".into());
            return CtStatus::NullPointer;
        }
        let protocol = match protocol {
            0 => Protocol::Baseline,
            1 => Protocol::CompactTag,
            p => return fail(Error::InvalidParams(format!("unknown protocol {p}"))),
        };
        if t1 == 0 || t2 == 0 || t3 == 0 {
            return fail(Error::ShapeMismatch(format!("zero dimension in {t1}x{t2}x{t3}")));
        }
        // SAFETY: lengths are guaranteed by the caller.
        let xs: Vec<i128> = unsafe { std::slice::from_raw_parts(x, t1 * t2) }.iter().map(|&v| v as i128).collect();
        let ys: Vec<i128> = unsafe { std::slice::from_raw_parts(y, t2 * t3) }.iter().map(|&v| v as i128).collect();
        let seed = r.seed.wrapping_add(r.runs);
        r.runs += 1;
        match run(r, protocol, (t1, t2, t3), &xs, &ys, seed) {
            Ok((vals, st)) => {
                // SAFETY: caller guarantees t1*t3 writable elements.
                unsafe { std::slice::from_raw_parts_mut(out, t1 * t3) }.copy_from_slice(&vals);
                if !stats.is_null() {
                    // SAFETY: non-null stats points to one CtStats.
                    unsafe { *stats = st };
                }
                CtStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn run(
    r: &CtRunner,
    protocol: Protocol,
    (t1, t2, t3): (usize, usize, usize),
    x: &[i128],
    y: &[i128],
    seed: u64,
) -> compacttag::Result<(Vec<i64>, CtStats)> {
    let mut dealer = Dealer::from_seed_u64(r.params, r.parties, seed)?;
    let material = dealer.provision(&plan_matmul_trunc(t1, t2, t3))?;
    let xs = dealer.share_signed(t1, t2, x)?;
    let ys = dealer.share_signed(t2, t3, y)?;
    let config = SessionConfig { adversary: r.adversary.clone(), seed, ..Default::default() };
    let mut s = Session::new(material, config)?;
    let z = s.matmul_trunc(&xs, &ys, protocol)?;
    let opened = s.reveal(&z)?;
    let c = s.counter(0);
    let (tag, trunc, value) = match protocol {
        Protocol::Baseline => (c.get("matmul").tag, c.get("truncate").tag, c.get("matmul").value),
        Protocol::CompactTag => (c.get("compact").tag, 0, c.get("compact").value),
    };
    let traffic = s.comm_log().party_total(1, op_scope);
    let stats = CtStats {
        tag_mults: tag,
        trunc_tag_mults: trunc,
        value_mults: value,
        broadcast_elements: traffic.elements,
        broadcast_bytes: traffic.bytes,
    };
    Ok((opened.data().iter().map(|e| e.to_i128() as i64).collect(), stats))
}
