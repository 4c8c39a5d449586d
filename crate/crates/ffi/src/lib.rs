//! C ABI over `spectral_mask`.
//!
//! Every fallible call returns an [`SmStatus`] and writes results through
//! out-pointers. Objects are opaque handles created by `*_new`/`*_enumerate`/
//! `*_run` and released by the matching `*_free`. On failure the message is
//! kept per thread and can be read with [`sm_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectral_mask::bounds::{self, CrossoverKind};
use spectral_mask::montecarlo::{mc_run, snapshot_json};
use spectral_mask::oracle::{psi2, Oracle};
use spectral_mask::{Accumulator, Error, ExactDistribution, McConfig, McQueries, ModelParams, Part};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    HypothesisViolation = 3,
    CapabilityExceeded = 4,
    Query = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmPart {
    Complex = 0,
    Real = 1,
    Imag = 2,
    Modulus = 3,
    ModulusCentered = 4,
}

impl From<SmPart> for Part {
    fn from(p: SmPart) -> Self {
        match p {
            SmPart::Complex => Part::Complex,
            SmPart::Real => Part::Real,
            SmPart::Imag => Part::Imag,
            SmPart::Modulus => Part::Modulus,
            SmPart::ModulusCentered => Part::ModulusCentered,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmCrossover {
    SecondForAllT = 0,
    FirstBeyondTStar = 1,
}

/// Opaque `(N, l, m)` triple.
pub struct SmParams(ModelParams);

/// Opaque exact distribution of one part.
pub struct SmDistribution(ExactDistribution);

/// Opaque Monte Carlo result, with the inputs needed to reproduce it.
pub struct SmAccumulator {
    params: ModelParams,
    config: McConfig,
    queries: McQueries,
    part: Part,
    acc: Accumulator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SmStatus {
    match err {
        Error::Domain(_) => SmStatus::InvalidParams,
        Error::Hypothesis(_) => SmStatus::HypothesisViolation,
        Error::Capability { .. } => SmStatus::CapabilityExceeded,
        Error::Query(_) => SmStatus::Query,
        Error::Resource(_) => SmStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, mapping errors and panics onto status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SmStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            SmStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn sm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library (e.g. [`sm_distribution_to_json`]) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn sm_params_new(n: u32, l: u32, m: u32, out: *mut *mut SmParams) -> SmStatus {
    guard(|| {
        let p = ModelParams::new(n, l, m)?;
        put(out, boxed(SmParams(p)), "out")
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`sm_params_new`].
#[no_mangle]
pub unsafe extern "C" fn sm_params_free(p: *mut SmParams) {
    free(p);
}

/// Exact distribution of `part`. `guard_n` caps `N`; 0 selects the default.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_enumerate(
    params: *const SmParams,
    part: SmPart,
    guard_n: u32,
    out: *mut *mut SmDistribution,
) -> SmStatus {
    guard(|| {
        let p = get(params, "params")?;
        let oracle = if guard_n == 0 { Oracle::default() } else { Oracle::with_guard(guard_n)? };
        let d = oracle.distribution(&p.0, part.into())?;
        put(out, boxed(SmDistribution(d)), "out")
    })
}

/// # Safety
/// `d` must be NULL or a handle from [`sm_distribution_enumerate`].
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_free(d: *mut SmDistribution) {
    free(d);
}

/// Number of support atoms.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_len(d: *const SmDistribution, out: *mut usize) -> SmStatus {
    guard(|| put(out, get(d, "distribution")?.0.atoms().len(), "out"))
}

/// Atom `index`: value `(re, im)` and probability. `im` is 0 for real parts.
///
/// # Safety
/// `d` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_atom(
    d: *const SmDistribution,
    index: usize,
    re: *mut f64,
    im: *mut f64,
    prob: *mut f64,
) -> SmStatus {
    guard(|| {
        let atoms = get(d, "distribution")?.0.atoms();
        let a = atoms
            .get(index)
            .ok_or_else(|| Error::Domain(format!("atom index {index} out of range (len {})", atoms.len())))?;
        put(re, a.value.re, "re")?;
        put(im, a.value.im, "im")?;
        put(prob, a.prob, "prob")
    })
}

/// `E[v^order]`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_moment(d: *const SmDistribution, order: u32, out: *mut f64) -> SmStatus {
    guard(|| put(out, get(d, "distribution")?.0.moment(order)?, "out"))
}

/// `P(|v| ≥ t)`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_tail(d: *const SmDistribution, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, get(d, "distribution")?.0.tail(t)?, "out"))
}

/// `E[exp(v²/K²)]`.
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_exp_moment(d: *const SmDistribution, k: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, get(d, "distribution")?.0.exp_moment(k)?, "out"))
}

/// Orlicz ψ₂ norm with its certified bracket `[lo, hi]`.
///
/// # Safety
/// `d` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_psi2(
    d: *const SmDistribution,
    tol: f64,
    norm: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
) -> SmStatus {
    guard(|| {
        let est = psi2::orlicz_norm_exact(&get(d, "distribution")?.0, tol)?;
        put(norm, est.norm, "norm")?;
        put(lo, est.bracket.0, "lo")?;
        put(hi, est.bracket.1, "hi")
    })
}

/// JSON serialization; release with [`sm_string_free`].
///
/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_distribution_to_json(d: *const SmDistribution, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let json = get(d, "distribution")?.0.to_json();
        put(out, CString::new(json).expect("JSON has no NUL").into_raw(), "out")
    })
}

/// Monte Carlo run for one real-valued part, recording moments up to
/// `max_order` and tails at `thresholds[0..n_thresholds]`.
///
/// # Safety
/// `params` must be a live handle, `thresholds` must point to
/// `n_thresholds` doubles (or be NULL when it is 0), and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_mc_run(
    params: *const SmParams,
    part: SmPart,
    samples: u64,
    seed: u64,
    thresholds: *const f64,
    n_thresholds: usize,
    max_order: u32,
    out: *mut *mut SmAccumulator,
) -> SmStatus {
    guard(|| {
        let p = get(params, "params")?.0;
        let ts = if n_thresholds == 0 {
            Vec::new()
        } else if thresholds.is_null() {
            return Err(Fail::Null("thresholds"));
        } else {
            std::slice::from_raw_parts(thresholds, n_thresholds).to_vec()
        };
        let part: Part = part.into();
        let config = McConfig::new(samples, seed);
        let queries = McQueries::new(vec![part]).with_thresholds(ts).with_max_order(max_order.max(1));
        let acc = mc_run(&p, &queries, &config)?;
        put(out, boxed(SmAccumulator { params: p, config, queries, part, acc }), "out")
    })
}

/// # Safety
/// `a` must be NULL or a handle from [`sm_mc_run`].
#[no_mangle]
pub unsafe extern "C" fn sm_accumulator_free(a: *mut SmAccumulator) {
    free(a);
}

/// Tail estimate at a threshold passed to [`sm_mc_run`], with its CI half-width.
///
/// # Safety
/// `a` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_accumulator_tail(
    a: *const SmAccumulator,
    t: f64,
    estimate: *mut f64,
    half_width: *mut f64,
) -> SmStatus {
    guard(|| {
        let a = get(a, "accumulator")?;
        let e = a.acc.tail(a.part, t)?;
        put(estimate, e.estimate, "estimate")?;
        put(half_width, e.half_width, "half_width")
    })
}

/// Raw moment estimate with its CI half-width.
///
/// # Safety
/// `a` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_accumulator_moment(
    a: *const SmAccumulator,
    order: u32,
    estimate: *mut f64,
    half_width: *mut f64,
) -> SmStatus {
    guard(|| {
        let a = get(a, "accumulator")?;
        let e = a.acc.moment(a.part, order)?;
        put(estimate, e.estimate, "estimate")?;
        put(half_width, e.half_width, "half_width")
    })
}

/// Reproducible JSON snapshot; release with [`sm_string_free`].
///
/// # Safety
/// `a` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_accumulator_to_json(a: *const SmAccumulator, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let a = get(a, "accumulator")?;
        let json = snapshot_json(&a.params, &a.config, &a.queries, &a.acc);
        put(out, CString::new(json).expect("JSON has no NUL").into_raw(), "out")
    })
}

/// Complementary standard normal CDF.
#[no_mangle]
pub extern "C" fn sm_q_function(x: f64) -> f64 {
    bounds::q_function(x)
}

/// `2·exp(−4t²/N)` for the real and imaginary parts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_tail_bound_uv(n: u32, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::tail_bound_uv(n, t)?, "out"))
}

/// `2·exp(−2t²/N)` for the centered modulus.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_tail_bound_mod(n: u32, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::tail_bound_mod(n, t)?, "out"))
}

/// Entropy-type tail bound; needs `m < N/2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_tail_bound_entropy(n: u32, m: u32, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::tail_bound_entropy(n, m, t)?, "out"))
}

/// Minimum of the two exponential tail bounds; needs `m < N/2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_tail_bound_combined(n: u32, m: u32, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::tail_bound_combined(n, m, t)?, "out"))
}

/// Tail bound through the Gaussian Q-function; needs `t > 0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_tail_bound_q(n: u32, t: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::tail_bound_q(n, t)?, "out"))
}

/// Upper bound on `E[U^{2·order}]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_moment_bound(n: u32, order: u32, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::moment_bound(n, order)?, "out"))
}

/// Upper bound on `E[exp(U²/K²)]`; needs `K > √N/2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_exp_moment_bound(n: u32, k: f64, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::exp_moment_bound(n, k)?, "out"))
}

/// `√N`-order upper bound on the ψ₂ norm.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_psi2_upper(n: u32, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::psi2_upper(n)?, "out"))
}

/// `N/√ln 2` upper bound on the ψ₂ norm.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_psi2_sup_upper(n: u32, out: *mut f64) -> SmStatus {
    guard(|| put(out, bounds::psi2_sup_upper(n)?, "out"))
}

/// Which exponent of the combined tail bound dominates. `t_star` is NaN
/// when the second branch wins for every `t`.
///
/// # Safety
/// The out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_crossover_region(
    n: u32,
    m: u32,
    kind: *mut SmCrossover,
    t_star: *mut f64,
    coeff_first: *mut f64,
    coeff_second: *mut f64,
) -> SmStatus {
    guard(|| {
        let v = bounds::crossover_region(n, m)?;
        let k = match v.kind {
            CrossoverKind::SecondForAllT => SmCrossover::SecondForAllT,
            CrossoverKind::FirstBeyondTStar => SmCrossover::FirstBeyondTStar,
        };
        put(kind, k, "kind")?;
        put(t_star, v.t_star.unwrap_or(f64::NAN), "t_star")?;
        put(coeff_first, v.coeff_first, "coeff_first")?;
        put(coeff_second, v.coeff_second, "coeff_second")
    })
}
