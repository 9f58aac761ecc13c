//! C ABI over `fpl-core`.
//!
//! Objects cross the boundary as opaque handles, released with the matching
//! `fpl_*_free`. Every fallible
//! call returns an [`FplStatus`]; on failure a message is kept per thread and
//! can be read with [`fpl_last_error`]. Panics are caught at the boundary and
//! reported as `FPL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fpl_core::integration::{self, HiddenForm, IntegrationConfig, IntegrationError, IntegrationResult};
use fpl_core::painting::{generate_painting, label_histogram, Painting, PaintingError, PaintingSpec};
use fpl_core::phenomenon::{self, probabilise_painting, PhenomenonError, RandomPhenomenon};
use fpl_core::prob::{self, ProbError, Universe};
use fpl_core::puzzle::{self, BorderOptions, FragmentPool, PuzzleError, PuzzleMode};
use fpl_core::Rational;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Unsolvable = 4,
    NotReached = 5,
    BudgetExhausted = 6,
    Inconsistent = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 99,
}

/// Opaque painting handle.
pub struct FplPainting {
    inner: Painting,
}

/// Opaque random phenomenon handle.
pub struct FplPhenomenon {
    inner: RandomPhenomenon,
}

/// Opaque hidden form handle.
pub struct FplHiddenForm {
    inner: HiddenForm,
}

/// Opaque integration result handle.
pub struct FplIntegration {
    inner: IntegrationResult,
}

/// Counters of one puzzle game.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FplPuzzleSummary {
    pub fragments_drawn: u64,
    pub placements: u64,
    pub trials: u64,
    pub completed_replicas: u32,
    /// 1-based draw that completed the last replica.
    pub last_completion_draw: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FplStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(FplStatus::InvalidArgument, msg.into())
    }
    fn null(what: &str) -> Self {
        Failure(FplStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<PaintingError> for Failure {
    fn from(e: PaintingError) -> Self {
        let code = match e {
            PaintingError::InfeasibleSpec(_) => FplStatus::Infeasible,
            _ => FplStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<PuzzleError> for Failure {
    fn from(e: PuzzleError) -> Self {
        let code = match e {
            PuzzleError::UnsolvablePool { .. } => FplStatus::Unsolvable,
            _ => FplStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<ProbError> for Failure {
    fn from(e: ProbError) -> Self {
        let code = match e {
            ProbError::NotReached { .. } => FplStatus::NotReached,
            _ => FplStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<PhenomenonError> for Failure {
    fn from(e: PhenomenonError) -> Self {
        Failure(FplStatus::InvalidArgument, e.to_string())
    }
}

impl From<IntegrationError> for Failure {
    fn from(e: IntegrationError) -> Self {
        let code = match e {
            IntegrationError::BudgetExhausted { .. } | IntegrationError::AmbiguityExhausted { .. } => FplStatus::BudgetExhausted,
            IntegrationError::InconsistentReplicas(_) => FplStatus::Inconsistent,
            IntegrationError::Painting(PaintingError::InfeasibleSpec(_)) => FplStatus::Infeasible,
            _ => FplStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(FplStatus::Parse, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FplStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FplStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len < need {
        return Err(Failure(FplStatus::BufferTooSmall, format!("{what} holds {len}, needs {need}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure::invalid(format!("{what}: {e}")))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|e| Failure::invalid(e.to_string()))
}

fn spec(width: u32, height: u32, counts: &[u32], seed: u64) -> PaintingSpec {
    PaintingSpec::new(width, height, counts, seed)
}

fn rational(num: u64, den: u64) -> Result<Rational, Failure> {
    if den == 0 {
        return Err(Failure::invalid("zero denominator"));
    }
    Ok(Rational::from_counts(num, den))
}

fn label_at(ph: &RandomPhenomenon, index: usize) -> Result<String, Failure> {
    ph.universe()
        .elements()
        .get(index)
        .cloned()
        .ok_or_else(|| Failure::invalid(format!("label index {index} out of range")))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fpl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by an `fpl_*` call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- paintings ----

/// Generate a unique-edge painting with `counts[j]` tiles of label `j + 1`.
///
/// # Safety
/// `counts` must point to `q` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_generate(
    width: u32,
    height: u32,
    counts: *const u32,
    q: usize,
    seed: u64,
    out: *mut *mut FplPainting,
) -> FplStatus {
    guard(|| {
        let counts = slice(counts, q, "counts")?;
        let p = generate_painting(&spec(width, height, counts, seed))?;
        put(out, Box::into_raw(Box::new(FplPainting { inner: p })), "out")
    })
}

/// Parse a painting from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_from_json(json: *const c_char, out: *mut *mut FplPainting) -> FplStatus {
    guard(|| {
        let p: Painting = serde_json::from_str(c_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(FplPainting { inner: p })), "out")
    })
}

/// JSON form of a painting; free the result with `fpl_string_free`.
///
/// # Safety
/// `p` must be a live painting handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_to_json(p: *const FplPainting, out: *mut *mut c_char) -> FplStatus {
    guard(|| {
        let p = borrow(p, "painting")?;
        put(out, owned_string(serde_json::to_string(&p.inner)?)?, "out")
    })
}

/// Width, height and label count of a painting.
///
/// # Safety
/// `p` must be a live painting handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_dims(p: *const FplPainting, width: *mut u32, height: *mut u32, q: *mut u32) -> FplStatus {
    guard(|| {
        let p = &borrow(p, "painting")?.inner;
        put(width, p.width(), "width")?;
        put(height, p.height(), "height")?;
        put(q, p.q(), "q")
    })
}

/// Tiles per label, written to `out[0..q]`.
///
/// # Safety
/// `p` must be a live painting handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_histogram(p: *const FplPainting, out: *mut u64, len: usize) -> FplStatus {
    guard(|| {
        let p = &borrow(p, "painting")?.inner;
        let out = out_slice(out, len, p.q() as usize, "out")?;
        for (j, n) in label_histogram(p) {
            out[j as usize - 1] = n;
        }
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpl_painting_free(p: *mut FplPainting) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Play the puzzle game: `border` non-zero assembles by edge signatures,
/// otherwise by location.
///
/// # Safety
/// `p` must be a live painting handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_puzzle_play(
    p: *const FplPainting,
    border: bool,
    replicas: u32,
    seed: u64,
    out: *mut FplPuzzleSummary,
) -> FplStatus {
    guard(|| {
        let p = &borrow(p, "painting")?.inner;
        let mode = if border { PuzzleMode::Border } else { PuzzleMode::Location };
        let pool = FragmentPool::from_painting(p, mode, replicas, seed)?;
        let a = match mode {
            PuzzleMode::Location => puzzle::solve_by_location(pool)?,
            PuzzleMode::Border => puzzle::solve_by_borders(pool, BorderOptions::default())?,
        };
        let r = a.report;
        let summary = FplPuzzleSummary {
            fragments_drawn: r.fragments_drawn,
            placements: r.placements,
            trials: r.trials,
            completed_replicas: r.completed_replicas,
            last_completion_draw: r.completion_order.iter().map(|c| c.draw_index).max().unwrap_or(0),
        };
        put(out, summary, "out")
    })
}

// ---- phenomena ----

/// The draw-with-replacement phenomenon of a painting.
///
/// # Safety
/// `p` must be a live painting handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_phenomenon_from_painting(p: *const FplPainting, out: *mut *mut FplPhenomenon) -> FplStatus {
    guard(|| {
        let ph = probabilise_painting(&borrow(p, "painting")?.inner);
        put(out, Box::into_raw(Box::new(FplPhenomenon { inner: ph })), "out")
    })
}

/// An urn with labels `"1".."n"` weighted by `weights`.
///
/// # Safety
/// `weights` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_phenomenon_from_weights(weights: *const u64, n: usize, out: *mut *mut FplPhenomenon) -> FplStatus {
    guard(|| {
        let w = slice(weights, n, "weights")?;
        let universe = Universe::labels(n as u32)?;
        let ph = RandomPhenomenon::from_weights("urn", universe, w)?;
        put(out, Box::into_raw(Box::new(FplPhenomenon { inner: ph })), "out")
    })
}

/// Number of labels in the phenomenon's universe.
///
/// # Safety
/// `ph` must be a live phenomenon handle.
#[no_mangle]
pub unsafe extern "C" fn fpl_phenomenon_label_count(ph: *const FplPhenomenon) -> usize {
    ph.as_ref().map_or(0, |p| p.inner.universe().len())
}

/// # Safety
/// `ph` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpl_phenomenon_free(ph: *mut FplPhenomenon) {
    if !ph.is_null() {
        drop(Box::from_raw(ph));
    }
}

/// Draw `draws` labels and write per-label counts to `counts`.
///
/// # Safety
/// `ph` must be a live phenomenon handle; `counts` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn fpl_prob_game(ph: *const FplPhenomenon, draws: u64, seed: u64, counts: *mut u64, len: usize) -> FplStatus {
    guard(|| {
        let ph = &borrow(ph, "phenomenon")?.inner;
        let out = out_slice(counts, len, ph.universe().len(), "counts")?;
        let t = phenomenon::run_frequency_experiment(ph, draws, seed);
        out[..t.counts.len()].copy_from_slice(&t.counts);
        Ok(())
    })
}

/// Share of `repetitions` length-`n` runs whose frequency of label
/// `label_index` lies within `epsilon` of `p_num / p_den`.
///
/// # Safety
/// `ph` must be a live phenomenon handle; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fpl_meta_probability(
    ph: *const FplPhenomenon,
    label_index: usize,
    p_num: u64,
    p_den: u64,
    epsilon: f64,
    n: u64,
    repetitions: u64,
    seed: u64,
    out: *mut f64,
) -> FplStatus {
    guard(|| {
        let ph = &borrow(ph, "phenomenon")?.inner;
        let label = label_at(ph, label_index)?;
        let est = prob::meta_probability(ph, &label, &rational(p_num, p_den)?, epsilon, n, repetitions, seed)?;
        put(out, est, "out")
    })
}

/// Doubling search from 16 up to `cap` for the first `N` whose estimate
/// reaches `1 - delta`.
///
/// # Safety
/// `ph` must be a live phenomenon handle; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fpl_find_n0(
    ph: *const FplPhenomenon,
    label_index: usize,
    p_num: u64,
    p_den: u64,
    epsilon: f64,
    delta: f64,
    repetitions: u64,
    seed: u64,
    cap: u64,
    out: *mut u64,
) -> FplStatus {
    guard(|| {
        let ph = &borrow(ph, "phenomenon")?.inner;
        let label = label_at(ph, label_index)?;
        let opts = prob::SearchOptions { start: prob::DEFAULT_N0_START, cap };
        let s = prob::find_n0(ph, &label, &rational(p_num, p_den)?, epsilon, delta, repetitions, seed, opts)?;
        put(out, s.n0, "out")
    })
}

/// Number of count vectors of `n` draws over `q` labels, as a decimal
/// string; free it with `fpl_string_free`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_count_structures(n: u64, q: u64, out: *mut *mut c_char) -> FplStatus {
    guard(|| put(out, owned_string(prob::count_statistical_structures(n, q).to_string())?, "out"))
}

// ---- hidden forms and integration ----

/// Generate a hidden form; `s_prime` 0 picks the smallest allowed range.
///
/// # Safety
/// `counts` must point to `q` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_form_generate(
    width: u32,
    height: u32,
    counts: *const u32,
    q: usize,
    seed: u64,
    s_prime: u64,
    out: *mut *mut FplHiddenForm,
) -> FplStatus {
    guard(|| {
        let counts = slice(counts, q, "counts")?;
        let form = HiddenForm::generate(&spec(width, height, counts, seed), (s_prime > 0).then_some(s_prime))?;
        put(out, Box::into_raw(Box::new(FplHiddenForm { inner: form })), "out")
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_form_from_json(json: *const c_char, out: *mut *mut FplHiddenForm) -> FplStatus {
    guard(|| {
        let form: HiddenForm = serde_json::from_str(c_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(FplHiddenForm { inner: form })), "out")
    })
}

/// # Safety
/// `form` must be a live form handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_form_to_json(form: *const FplHiddenForm, out: *mut *mut c_char) -> FplStatus {
    guard(|| {
        let form = borrow(form, "form")?;
        put(out, owned_string(serde_json::to_string(&form.inner)?)?, "out")
    })
}

/// # Safety
/// `form` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpl_form_free(form: *mut FplHiddenForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// Integrate the form's complexified stream with `confirm` replicas, giving
/// up after `max_events` events.
///
/// # Safety
/// `form` must be a live form handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_integrate(
    form: *const FplHiddenForm,
    seed: u64,
    confirm: u32,
    max_events: u64,
    out: *mut *mut FplIntegration,
) -> FplStatus {
    guard(|| {
        let form = &borrow(form, "form")?.inner;
        let config = IntegrationConfig { confirmation_replicas: confirm, max_events, ..Default::default() };
        let res = integration::integrate(integration::complexified_phenomenon(form, seed), config)?;
        put(out, Box::into_raw(Box::new(FplIntegration { inner: res })), "out")
    })
}

/// Number of labels in the integrated law.
///
/// # Safety
/// `res` must be a live integration handle.
#[no_mangle]
pub unsafe extern "C" fn fpl_integration_label_count(res: *const FplIntegration) -> usize {
    res.as_ref().map_or(0, |r| r.inner.law.universe().len())
}

/// Probability of label `index` as a reduced fraction.
///
/// # Safety
/// `res` must be a live integration handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_integration_law(res: *const FplIntegration, index: usize, num: *mut u64, den: *mut u64) -> FplStatus {
    guard(|| {
        let r = &borrow(res, "result")?.inner;
        let atom = r.law.atoms().get(index).ok_or_else(|| Failure::invalid(format!("label index {index} out of range")))?;
        let (n, d) = atom.to_u64_parts().ok_or_else(|| Failure::invalid("fraction exceeds 64 bits"))?;
        put(num, n, "num")?;
        put(den, d, "den")
    })
}

/// Tiles of one completed replica.
///
/// # Safety
/// `res` must be a live integration handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_integration_total(res: *const FplIntegration, out: *mut u64) -> FplStatus {
    guard(|| put(out, borrow(res, "result")?.inner.n_phi_total, "out"))
}

/// # Safety
/// `res` must be a live integration handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fpl_integration_to_json(res: *const FplIntegration, out: *mut *mut c_char) -> FplStatus {
    guard(|| {
        let r = borrow(res, "result")?;
        put(out, owned_string(serde_json::to_string(&r.inner)?)?, "out")
    })
}

/// # Safety
/// `res` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fpl_integration_free(res: *mut FplIntegration) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
