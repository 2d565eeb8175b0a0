//! C ABI over the headprune search engine.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every fallible call returns an
//! [`HpStatus`]; on failure a message describing the error is available
//! from [`hp_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use headprune::astar::SearchOptions;
use headprune::baselines::{global_prune, local_prune, random_trial};
use headprune::oracle::{AdditiveOracle, AdditiveSpec, SupermodularOracle, SupermodularSpec, TableFile, TableOracle};
use headprune::{astar_prune, CostMode, Error, Evaluator, HeadIndex, PruneMask, PruneSolution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed JSON, bad geometry or a negative budget.
    InvalidArgument = 3,
    OutOfBounds = 4,
    /// The oracle failed. For prune calls a partial solution may still be
    /// returned.
    OracleFailure = 5,
    Invariant = 6,
    IndexOutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpStrategy {
    Astar = 0,
    Local = 1,
    Global = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpCostMode {
    Incremental = 0,
    Baseline = 1,
}

/// Memoizing accuracy evaluator.
pub struct HpEvaluator {
    inner: Evaluator,
}

/// Result of a pruning run.
pub struct HpSolution {
    inner: PruneSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> HpStatus {
    match err {
        Error::OutOfBounds { .. } => HpStatus::OutOfBounds,
        Error::Invariant(_) => HpStatus::Invariant,
        e if e.is_oracle_failure() => HpStatus::OracleFailure,
        _ => HpStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> HpStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> HpStatus) -> HpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HpStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return HpStatus::NullPointer;
        })+
    };
}

fn build_evaluator(text: &str) -> Result<Evaluator, Error> {
    let invalid = |e: serde_json::Error| Error::InvalidOracle(e.to_string());
    let value: serde_json::Value = serde_json::from_str(text).map_err(invalid)?;
    let obj = value.as_object().filter(|o| o.len() == 1).ok_or_else(|| {
        Error::InvalidOracle("expected an object with exactly one of additive, supermodular, table".into())
    })?;
    let (kind, body) = obj.iter().next().expect("one entry");
    let body = body.clone();
    Ok(match kind.as_str() {
        "additive" => Evaluator::new(AdditiveOracle::new(
            serde_json::from_value::<AdditiveSpec>(body).map_err(invalid)?,
        )?),
        "supermodular" => Evaluator::new(SupermodularOracle::new(
            serde_json::from_value::<SupermodularSpec>(body).map_err(invalid)?,
        )?),
        "table" => Evaluator::new(TableOracle::new(
            serde_json::from_value::<TableFile>(body).map_err(invalid)?,
        )?),
        other => return Err(Error::InvalidOracle(format!("unknown oracle kind {other:?}"))),
    })
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds an evaluator from a JSON description: exactly one of
/// `{"additive": {...}}`, `{"supermodular": {...}}` or `{"table": {...}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hp_evaluator_from_json(json: *const c_char, out: *mut *mut HpEvaluator) -> HpStatus {
    guard(|| {
        non_null!(json, out);
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("oracle description is not valid UTF-8");
            return HpStatus::InvalidUtf8;
        };
        match build_evaluator(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(HpEvaluator { inner }));
                HpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `evaluator` must come from [`hp_evaluator_from_json`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_evaluator_free(evaluator: *mut HpEvaluator) {
    if !evaluator.is_null() {
        drop(Box::from_raw(evaluator));
    }
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_evaluator_geometry(
    evaluator: *const HpEvaluator,
    layers: *mut usize,
    heads: *mut usize,
    baseline: *mut f64,
) -> HpStatus {
    guard(|| {
        non_null!(evaluator, layers, heads, baseline);
        let ev = &(*evaluator).inner;
        *layers = ev.geometry().layers();
        *heads = ev.geometry().heads_per_layer();
        *baseline = ev.baseline();
        HpStatus::Ok
    })
}

/// Accuracy with the given heads pruned. `pairs` holds `count` (layer, head)
/// pairs laid out flat; it may be NULL when `count` is 0.
///
/// # Safety
/// `pairs` must point to `2 * count` values; `evaluator` and `accuracy` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_evaluator_evaluate(
    evaluator: *const HpEvaluator,
    pairs: *const usize,
    count: usize,
    accuracy: *mut f64,
) -> HpStatus {
    guard(|| {
        non_null!(evaluator, accuracy);
        if count > 0 {
            non_null!(pairs);
        }
        let ev = &(*evaluator).inner;
        let flat = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(pairs, 2 * count)
        };
        let heads = flat.chunks_exact(2).map(|p| HeadIndex::new(p[0], p[1]));
        let result = PruneMask::from_heads(heads, ev.geometry()).and_then(|m| ev.evaluate(&m));
        match result {
            Ok(a) => {
                *accuracy = a;
                HpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluation requests served and distinct masks computed so far.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_evaluator_counts(
    evaluator: *const HpEvaluator,
    requested: *mut u64,
    computed: *mut u64,
) -> HpStatus {
    guard(|| {
        non_null!(evaluator, requested, computed);
        let c = (*evaluator).inner.counter();
        *requested = c.requested;
        *computed = c.computed;
        HpStatus::Ok
    })
}

/// Runs a pruning strategy. `budget` is in percentage points; pass
/// `INFINITY` for an unbounded run. `workers` of 0 or 1 runs serially.
///
/// On [`HpStatus::OracleFailure`] `*out` may still receive the partial
/// solution built before the failure; it must be freed either way.
///
/// # Safety
/// `evaluator` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_prune(
    evaluator: *const HpEvaluator,
    strategy: HpStrategy,
    budget: f64,
    mode: HpCostMode,
    workers: usize,
    out: *mut *mut HpSolution,
) -> HpStatus {
    guard(|| {
        non_null!(evaluator, out);
        *out = ptr::null_mut();
        let ev = &(*evaluator).inner;
        let options = SearchOptions {
            mode: match mode {
                HpCostMode::Incremental => CostMode::Incremental,
                HpCostMode::Baseline => CostMode::Baseline,
            },
            workers: workers.max(1),
        };
        let result = match strategy {
            HpStrategy::Astar => astar_prune(ev, budget, options),
            HpStrategy::Local => local_prune(ev, budget, options),
            HpStrategy::Global => global_prune(ev, budget, options),
        };
        match result {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(HpSolution { inner }));
                HpStatus::Ok
            }
            Err(Error::Aborted { source, partial }) => {
                *out = Box::into_raw(Box::new(HpSolution { inner: *partial }));
                fail(*source)
            }
            Err(e) => fail(e),
        }
    })
}

/// One random-order trial: number of heads pruned before the budget ran out.
///
/// # Safety
/// `evaluator` and `pruned` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_random_trial(
    evaluator: *const HpEvaluator,
    budget: f64,
    seed: u64,
    pruned: *mut usize,
) -> HpStatus {
    guard(|| {
        non_null!(evaluator, pruned);
        match random_trial(&(*evaluator).inner, budget, seed) {
            Ok(t) => {
                *pruned = t.pruned_count;
                HpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `solution` must come from [`hp_prune`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_solution_free(solution: *mut HpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_solution_pruned_count(solution: *const HpSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.pruned.len())
}

/// The `index`-th pruned head in prune order.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_solution_pruned_head(
    solution: *const HpSolution,
    index: usize,
    layer: *mut usize,
    head: *mut usize,
) -> HpStatus {
    guard(|| {
        non_null!(solution, layer, head);
        let pruned = &(*solution).inner.pruned;
        let Some(p) = pruned.get(index) else {
            set_error(format!("index {index} out of range for {} pruned heads", pruned.len()));
            return HpStatus::IndexOutOfRange;
        };
        *layer = p.head.layer;
        *head = p.head.head;
        HpStatus::Ok
    })
}

/// Final accuracy, budget charged and distinct masks evaluated.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_solution_summary(
    solution: *const HpSolution,
    final_accuracy: *mut f64,
    budget_charged: *mut f64,
    searches: *mut u64,
) -> HpStatus {
    guard(|| {
        non_null!(solution, final_accuracy, budget_charged, searches);
        let s = &(*solution).inner;
        *final_accuracy = s.final_accuracy;
        *budget_charged = s.budget.charged();
        *searches = s.evaluations.computed;
        HpStatus::Ok
    })
}

/// Full solution report as JSON. Release the string with [`hp_string_free`].
///
/// # Safety
/// `solution` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hp_solution_to_json(solution: *const HpSolution, out: *mut *mut c_char) -> HpStatus {
    guard(|| {
        non_null!(solution, out);
        *out = ptr::null_mut();
        match (*solution).inner.to_json() {
            Ok(text) => {
                *out = CString::new(text).expect("json has no NUL").into_raw();
                HpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
