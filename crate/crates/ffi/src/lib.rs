//! C ABI for the `surprisal` crate.
//!
//! Every fallible function returns a [`SurprisalStatus`] and writes its
//! result through an out-pointer. On failure the message is available from
//! [`surprisal_last_error`] on the same thread. Two-level distributions are
//! opaque handles created by `surprisal_two_level_*` and released with
//! [`surprisal_two_level_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use surprisal::entropy::{self, DiscreteDistribution};
use surprisal::extremal;
use surprisal::tails::{self, TailQuery};
use surprisal::{Alphabet, Error, Method, TwoLevelDistribution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurprisalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidDistribution = 2,
    Domain = 3,
    Format = 4,
    Inconsistent = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurprisalMethod {
    Deficiency = 0,
    HolensteinRenner = 1,
}

/// A min-entropy certificate. Entropies and deviations are in nats.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurprisalCertificate {
    pub n: u64,
    pub alphabet_bits: u32,
    pub delta_def: f64,
    pub epsilon: f64,
    pub deviation_t: f64,
    pub min_entropy_bound: f64,
    /// Bits per symbol.
    pub rate_per_symbol: f64,
}

/// Opaque two-level distribution.
pub struct SurprisalTwoLevel {
    inner: TwoLevelDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SurprisalStatus {
    match e {
        Error::InvalidDistribution(_) => SurprisalStatus::InvalidDistribution,
        Error::Domain(_) => SurprisalStatus::Domain,
        Error::Format { .. } => SurprisalStatus::Format,
        Error::Inconsistent(_) => SurprisalStatus::Inconsistent,
        Error::Io(_) => SurprisalStatus::Io,
    }
}

/// Run `f`, write its value to `out`, and turn errors and panics into status codes.
fn guard<T>(out: *mut T, f: impl FnOnce() -> surprisal::Result<T>) -> SurprisalStatus {
    if out.is_null() {
        set_last_error("output pointer is null".into());
        return SurprisalStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(value)) => {
            // SAFETY: checked non-null above; the caller provides writable storage.
            unsafe { out.write(value) };
            SurprisalStatus::Ok
        }
        Ok(Err(e)) => {
            let status = status_of(&e);
            set_last_error(e.to_string());
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SurprisalStatus::Panic
        }
    }
}

/// # Safety
/// `weights` must point to `len` readable doubles, or be null with `len == 0`.
unsafe fn distribution(weights: *const f64, len: usize) -> surprisal::Result<DiscreteDistribution> {
    if weights.is_null() {
        return Err(Error::Domain("weights pointer is null".into()));
    }
    DiscreteDistribution::new(std::slice::from_raw_parts(weights, len).to_vec())
}

fn handle<'a>(h: *const SurprisalTwoLevel) -> surprisal::Result<&'a TwoLevelDistribution> {
    // SAFETY: non-null handles come from `surprisal_two_level_*` and are live per the API contract.
    unsafe { h.as_ref() }
        .map(|h| &h.inner)
        .ok_or_else(|| Error::Domain("two-level handle is null".into()))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn surprisal_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Shannon entropy in nats.
///
/// # Safety
/// `weights` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_shannon_entropy(weights: *const f64, len: usize, out: *mut f64) -> SurprisalStatus {
    guard(out, || Ok(entropy::shannon_entropy(&distribution(weights, len)?)))
}

/// Rényi entropy of order `alpha` in nats.
///
/// # Safety
/// `weights` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_renyi_entropy(
    weights: *const f64,
    len: usize,
    alpha: f64,
    out: *mut f64,
) -> SurprisalStatus {
    guard(out, || entropy::renyi_entropy(&distribution(weights, len)?, alpha))
}

/// Min-entropy in nats.
///
/// # Safety
/// `weights` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_min_entropy(weights: *const f64, len: usize, out: *mut f64) -> SurprisalStatus {
    guard(out, || Ok(entropy::min_entropy(&distribution(weights, len)?)))
}

fn new_handle(out: *mut *mut SurprisalTwoLevel, f: impl FnOnce() -> surprisal::Result<TwoLevelDistribution>) -> SurprisalStatus {
    guard(out, || Ok(Box::into_raw(Box::new(SurprisalTwoLevel { inner: f()? }))))
}

/// Two-level distribution over `alphabet_size` symbols with heavy mass `theta`.
///
/// # Safety
/// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_from_theta(
    alphabet_size: u64,
    theta: f64,
    out: *mut *mut SurprisalTwoLevel,
) -> SurprisalStatus {
    new_handle(out, || TwoLevelDistribution::from_theta(Alphabet::new(alphabet_size)?, theta))
}

/// Worst-case two-level distribution over `2^alphabet_bits` symbols with
/// deficiency `delta_def` nats.
///
/// # Safety
/// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_from_deficiency(
    alphabet_bits: u32,
    delta_def: f64,
    out: *mut *mut SurprisalTwoLevel,
) -> SurprisalStatus {
    new_handle(out, || extremal::from_deficiency(Alphabet::from_bits(alphabet_bits)?, delta_def))
}

/// Worst-case two-level distribution over `2^alphabet_bits` symbols with
/// Shannon entropy `k` nats.
///
/// # Safety
/// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_from_entropy(
    alphabet_bits: u32,
    k: f64,
    out: *mut *mut SurprisalTwoLevel,
) -> SurprisalStatus {
    new_handle(out, || extremal::solve_theta(Alphabet::from_bits(alphabet_bits)?, k))
}

/// # Safety
/// `h` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_free(h: *mut SurprisalTwoLevel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Heavy-atom probability, or NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_theta(h: *const SurprisalTwoLevel) -> f64 {
    handle(h).map_or(f64::NAN, |tl| tl.theta())
}

/// Deficiency in nats, or NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_deficiency(h: *const SurprisalTwoLevel) -> f64 {
    handle(h).map_or(f64::NAN, |tl| tl.deficiency())
}

/// Shannon entropy in nats, or NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_shannon(h: *const SurprisalTwoLevel) -> f64 {
    handle(h).map_or(f64::NAN, |tl| tl.shannon_entropy())
}

/// Min-entropy in nats, or NaN for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_min_entropy(h: *const SurprisalTwoLevel) -> f64 {
    handle(h).map_or(f64::NAN, |tl| tl.min_entropy())
}

/// Rényi entropy of order `alpha` in nats.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_renyi(
    h: *const SurprisalTwoLevel,
    alpha: f64,
    out: *mut f64,
) -> SurprisalStatus {
    guard(out, || handle(h)?.renyi_entropy(alpha))
}

/// `E exp(t (H - surprise))` for `t >= -1`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_two_level_mgf(h: *const SurprisalTwoLevel, t: f64, out: *mut f64) -> SurprisalStatus {
    guard(out, || tails::mgf_exact(handle(h)?, t))
}

/// Smallest Rényi entropy of order `alpha > 1`, in nats, over `2^alphabet_bits`
/// symbols with Shannon entropy `k` nats.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_worst_renyi(alphabet_bits: u32, k: f64, alpha: f64, out: *mut f64) -> SurprisalStatus {
    guard(out, || {
        extremal::worst_renyi_given_shannon(Alphabet::from_bits(alphabet_bits)?, k, alpha)
    })
}

/// One-sided tail bound for `n` samples with deficiency `delta_def` nats at
/// total deviation `t` nats.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_tail_epsilon(
    n: u64,
    alphabet_bits: u32,
    delta_def: f64,
    t: f64,
    out: *mut f64,
) -> SurprisalStatus {
    guard(out, || {
        tails::tail_epsilon(&TailQuery::new(n, Alphabet::from_bits(alphabet_bits)?, delta_def, t)?)
    })
}

/// Min-entropy certificate for `n` samples over `2^alphabet_bits` symbols.
/// `method` is a [`SurprisalMethod`] value; `hr_constant` is used only by the
/// Holenstein-Renner method.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn surprisal_certificate(
    n: u64,
    alphabet_bits: u32,
    delta_def: f64,
    epsilon: f64,
    method: u32,
    hr_constant: f64,
    out: *mut SurprisalCertificate,
) -> SurprisalStatus {
    guard(out, || {
        let method = match method {
            m if m == SurprisalMethod::Deficiency as u32 => Method::Deficiency,
            m if m == SurprisalMethod::HolensteinRenner as u32 => Method::HolensteinRenner { constant: hr_constant },
            m => return Err(Error::Domain(format!("unknown method {m}"))),
        };
        let c = tails::certificate(n, Alphabet::from_bits(alphabet_bits)?, delta_def, epsilon, method)?;
        Ok(SurprisalCertificate {
            n: c.n,
            alphabet_bits,
            delta_def: c.delta_def,
            epsilon: c.epsilon,
            deviation_t: c.deviation_t,
            min_entropy_bound: c.min_entropy_bound,
            rate_per_symbol: c.rate_per_symbol,
        })
    })
}
