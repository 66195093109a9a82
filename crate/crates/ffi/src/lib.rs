//! C ABI over the `splitmin` engine.
//!
//! Objects are opaque handles created by `sm_*_new`/`sm_*_parse`/`sm_solve`
//! and released with the matching `sm_*_free`. Every fallible call returns
//! an [`SmStatus`]; on failure a message is available from
//! [`sm_last_error`] on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splitmin::beliefs::DEFAULT_TIE_TOL;
use splitmin::engine::{run, EngineError, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
use splitmin::format::{parse_model, parse_params_file};
use splitmin::oracle::{brute_force_minimize_capped, OracleError};
use splitmin::params::{classify_params, make_uniform_params, validate_params};
use splitmin::{FactorGraph, OptimalityClass, Order, RunConfig, RunReport, RunStatus, Schedule, SplitParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    CapExceeded = 4,
    Unavailable = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmRunStatus {
    Converged = 0,
    MaxIters = 1,
    InfiniteMessage = 2,
}

/// Strongest optimality guarantee of a parameter vector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmClass {
    None = 0,
    LocalOnly = 1,
    GlobalConical = 2,
    GlobalSign = 3,
}

/// Options for [`sm_solve`]; start from [`sm_solve_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmSolveOptions {
    /// 0 for synchronous, 1 for asynchronous.
    pub schedule: u32,
    /// Visit variables in a seeded random order (asynchronous only).
    pub random_order: bool,
    pub seed: u64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub damping: f64,
    pub tie_tol: f64,
}

/// Opaque factor graph.
pub struct SmGraph {
    inner: FactorGraph,
}

/// Opaque parameter vector.
pub struct SmParams {
    inner: SplitParams,
}

/// Opaque run report.
pub struct SmReport {
    inner: RunReport,
    objective: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SmStatus, msg: impl Into<String>) -> SmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SmStatus) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SmStatus::Panic, "internal panic"),
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, SmStatus> {
    if p.is_null() {
        return Err(fail(SmStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SmStatus::InvalidArgument, "string is not UTF-8"))
}

fn boxed<T>(value: T, out: *mut *mut T) -> SmStatus {
    unsafe { *out = Box::into_raw(Box::new(value)) };
    SmStatus::Ok
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a graph with `n` variables of the given cardinalities.
///
/// # Safety
/// `cards` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_new(cards: *const usize, n: usize, out: *mut *mut SmGraph) -> SmStatus {
    guard(|| {
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        let Some(cards) = slice(cards, n) else {
            return fail(SmStatus::NullPointer, "null cardinalities");
        };
        match FactorGraph::new(cards.to_vec()) {
            Ok(g) => boxed(SmGraph { inner: g }, out),
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Parses a model in FGM text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_parse(model: *const c_char, out: *mut *mut SmGraph) -> SmStatus {
    guard(|| {
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        let s = match text(model) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match parse_model(s) {
            Ok(g) => boxed(SmGraph { inner: g }, out),
            Err(e) => fail(SmStatus::ParseError, e.to_string()),
        }
    })
}

/// Sets the unary potential of `var`. Use `INFINITY` for `+inf`.
///
/// # Safety
/// `graph` must be a live handle and `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_set_unary(
    graph: *mut SmGraph,
    var: usize,
    values: *const f64,
    len: usize,
) -> SmStatus {
    guard(|| {
        let (Some(g), Some(v)) = (graph.as_mut(), slice(values, len)) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        match g.inner.set_unary(var, v.to_vec()) {
            Ok(()) => SmStatus::Ok,
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Appends a factor with a row-major table (last scope variable fastest).
/// Its index is written to `out_index` when that pointer is not NULL.
///
/// # Safety
/// `graph` must be a live handle; `scope` and `values` must point to
/// `arity` and `len` elements.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_add_factor(
    graph: *mut SmGraph,
    scope: *const usize,
    arity: usize,
    values: *const f64,
    len: usize,
    out_index: *mut usize,
) -> SmStatus {
    guard(|| {
        let (Some(g), Some(s), Some(v)) = (graph.as_mut(), slice(scope, arity), slice(values, len)) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        match g.inner.add_factor(s.to_vec(), v.to_vec()) {
            Ok(a) => {
                if !out_index.is_null() {
                    *out_index = a;
                }
                SmStatus::Ok
            }
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Number of variables, or 0 for a NULL handle.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_num_vars(graph: *const SmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.num_vars())
}

/// Number of factors, or 0 for a NULL handle.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_num_factors(graph: *const SmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.num_factors())
}

/// Objective value at assignment `x` of length `n`.
///
/// # Safety
/// `graph` must be a live handle, `x` must point to `n` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_evaluate(
    graph: *const SmGraph,
    x: *const usize,
    n: usize,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let (Some(g), Some(x)) = (graph.as_ref(), slice(x, n)) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        match g.inner.evaluate(x) {
            Ok(v) => {
                *out = v;
                SmStatus::Ok
            }
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_graph_free(graph: *mut SmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// All-ones parameters (standard min-sum).
///
/// # Safety
/// `graph` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_params_ones(graph: *const SmGraph, out: *mut *mut SmParams) -> SmStatus {
    guard(|| {
        let Some(g) = graph.as_ref() else {
            return fail(SmStatus::NullPointer, "null graph");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        boxed(SmParams { inner: SplitParams::ones(&g.inner) }, out)
    })
}

/// `c_i = 1`, `c_α = 1/d` with `d` the largest variable degree.
///
/// # Safety
/// `graph` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_params_uniform(graph: *const SmGraph, out: *mut *mut SmParams) -> SmStatus {
    guard(|| {
        let Some(g) = graph.as_ref() else {
            return fail(SmStatus::NullPointer, "null graph");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        match make_uniform_params(&g.inner) {
            Ok(c) => boxed(SmParams { inner: c }, out),
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Parses `cvar <i> <v>` / `cfac <a> <v>` lines over all-ones defaults.
///
/// # Safety
/// `graph` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_params_parse(
    graph: *const SmGraph,
    params: *const c_char,
    out: *mut *mut SmParams,
) -> SmStatus {
    guard(|| {
        let Some(g) = graph.as_ref() else {
            return fail(SmStatus::NullPointer, "null graph");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        let s = match text(params) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match parse_params_file(s, &g.inner) {
            Ok(c) => boxed(SmParams { inner: c }, out),
            Err(e) => fail(SmStatus::ParseError, e.to_string()),
        }
    })
}

/// Sets `c_i` for variable `var`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_params_set_var(params: *mut SmParams, var: usize, value: f64) -> SmStatus {
    guard(|| {
        let Some(c) = params.as_mut() else {
            return fail(SmStatus::NullPointer, "null params");
        };
        if var >= c.inner.vars().len() {
            return fail(SmStatus::InvalidArgument, "variable index out of range");
        }
        c.inner.set_var(var, value);
        SmStatus::Ok
    })
}

/// Sets `c_α` for factor `factor`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_params_set_factor(params: *mut SmParams, factor: usize, value: f64) -> SmStatus {
    guard(|| {
        let Some(c) = params.as_mut() else {
            return fail(SmStatus::NullPointer, "null params");
        };
        if factor >= c.inner.factors().len() {
            return fail(SmStatus::InvalidArgument, "factor index out of range");
        }
        c.inner.set_factor(factor, value);
        SmStatus::Ok
    })
}

/// Classifies parameters by the direct sign tests.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_params_classify(
    params: *const SmParams,
    graph: *const SmGraph,
    out: *mut SmClass,
) -> SmStatus {
    guard(|| {
        let (Some(c), Some(g)) = (params.as_ref(), graph.as_ref()) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        match classify_params(&c.inner, &g.inner) {
            Ok(cls) => {
                *out = match cls.class {
                    OptimalityClass::None => SmClass::None,
                    OptimalityClass::LocalOnly => SmClass::LocalOnly,
                    OptimalityClass::GlobalConical => SmClass::GlobalConical,
                    OptimalityClass::GlobalSign => SmClass::GlobalSign,
                };
                SmStatus::Ok
            }
            Err(e) => fail(SmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases parameters. NULL is ignored.
///
/// # Safety
/// `params` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_params_free(params: *mut SmParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Default options: synchronous, natural order, tolerance 1e-8, 1000
/// sweeps, no damping, tie tolerance 1e-9.
#[no_mangle]
pub extern "C" fn sm_solve_options_default() -> SmSolveOptions {
    SmSolveOptions {
        schedule: 0,
        random_order: false,
        seed: 0,
        tol: DEFAULT_TOL,
        max_sweeps: DEFAULT_MAX_SWEEPS,
        damping: 0.0,
        tie_tol: DEFAULT_TIE_TOL,
    }
}

/// Runs message passing from zero messages. A run that hits an infinite
/// message still produces a report with that status.
///
/// # Safety
/// Handles must be live; `options` may be NULL for defaults; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_solve(
    graph: *const SmGraph,
    params: *const SmParams,
    options: *const SmSolveOptions,
    out: *mut *mut SmReport,
) -> SmStatus {
    guard(|| {
        let (Some(g), Some(c)) = (graph.as_ref(), params.as_ref()) else {
            return fail(SmStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        let o = options.as_ref().copied().unwrap_or_else(|| sm_solve_options_default());
        let schedule = match (o.schedule, o.random_order) {
            (0, _) => Schedule::Sync,
            (1, false) => Schedule::Async(Order::Natural),
            (1, true) => Schedule::Async(Order::Random(o.seed)),
            _ => return fail(SmStatus::InvalidArgument, "schedule must be 0 or 1"),
        };
        let config = RunConfig {
            schedule,
            tol: o.tol,
            max_sweeps: o.max_sweeps,
            damping: o.damping,
            tie_tol: o.tie_tol,
        };
        if let Err(e) = validate_params(&c.inner, &g.inner) {
            return fail(SmStatus::InvalidArgument, e.to_string());
        }
        match run(&g.inner, &c.inner, &config) {
            Ok(report) => {
                let objective = report.estimate.assignment.as_ref().map(|x| g.inner.evaluate_unchecked(x));
                boxed(SmReport { inner: report, objective }, out)
            }
            Err(e @ EngineError::Config(_)) | Err(e @ EngineError::Params(_)) => {
                fail(SmStatus::InvalidArgument, e.to_string())
            }
            Err(e) => fail(SmStatus::Unavailable, e.to_string()),
        }
    })
}

/// Run status of a report.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_report_status(report: *const SmReport) -> SmRunStatus {
    match report.as_ref().map(|r| r.inner.status) {
        Some(RunStatus::Converged) => SmRunStatus::Converged,
        Some(RunStatus::MaxIters) | None => SmRunStatus::MaxIters,
        Some(RunStatus::InfiniteMessage) => SmRunStatus::InfiniteMessage,
    }
}

/// Number of completed sweeps.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_report_sweeps(report: *const SmReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.sweeps)
}

/// Whether every variable belief has a single minimizer.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sm_report_unique(report: *const SmReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.estimate.unique)
}

/// Copies the unique estimate into `out` (length `n`) and its objective
/// into `objective` (may be NULL). Returns `Unavailable` when the
/// estimate is not unique.
///
/// # Safety
/// `report` must be a live handle and `out` must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn sm_report_estimate(
    report: *const SmReport,
    out: *mut usize,
    n: usize,
    objective: *mut f64,
) -> SmStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(SmStatus::NullPointer, "null report");
        };
        let Some(x) = &r.inner.estimate.assignment else {
            return fail(SmStatus::Unavailable, "estimate is not unique");
        };
        if n < x.len() {
            return fail(SmStatus::BufferTooSmall, format!("need room for {} values", x.len()));
        }
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out, x.len());
        if let (Some(v), false) = (r.objective, objective.is_null()) {
            *objective = v;
        }
        SmStatus::Ok
    })
}

/// Final dual lower bound; `Unavailable` unless the parameters pass the
/// global sign test.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_report_lower_bound(report: *const SmReport, out: *mut f64) -> SmStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(SmStatus::NullPointer, "null report");
        };
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        match r.inner.lower_bound {
            Some(lb) => {
                *out = lb;
                SmStatus::Ok
            }
            None => fail(SmStatus::Unavailable, "no lower bound for these parameters"),
        }
    })
}

/// Copies the final belief of `var` into `out` (length `n`).
///
/// # Safety
/// `report` must be a live handle and `out` must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn sm_report_var_belief(
    report: *const SmReport,
    var: usize,
    out: *mut f64,
    n: usize,
) -> SmStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(SmStatus::NullPointer, "null report");
        };
        let Some(b) = r.inner.beliefs.var.get(var) else {
            return fail(SmStatus::InvalidArgument, "variable index out of range");
        };
        if n < b.len() {
            return fail(SmStatus::BufferTooSmall, format!("need room for {} values", b.len()));
        }
        if out.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        ptr::copy_nonoverlapping(b.as_ptr(), out, b.len());
        SmStatus::Ok
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_report_free(report: *mut SmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Exhaustive minimum over at most `cap` joint states. Writes the minimum,
/// the first minimizer (into `out_x`, length `n`) and the number of
/// minimizers.
///
/// # Safety
/// `graph` must be a live handle; outputs must be writable, `out_x` with
/// room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn sm_oracle_minimize(
    graph: *const SmGraph,
    cap: usize,
    out_value: *mut f64,
    out_x: *mut usize,
    n: usize,
    out_count: *mut usize,
) -> SmStatus {
    guard(|| {
        let Some(g) = graph.as_ref() else {
            return fail(SmStatus::NullPointer, "null graph");
        };
        if out_value.is_null() || out_x.is_null() || out_count.is_null() {
            return fail(SmStatus::NullPointer, "null output pointer");
        }
        if n < g.inner.num_vars() {
            return fail(SmStatus::BufferTooSmall, format!("need room for {} values", g.inner.num_vars()));
        }
        match brute_force_minimize_capped(&g.inner, cap) {
            Ok(m) => {
                *out_value = m.value;
                *out_count = m.minimizers.len();
                ptr::copy_nonoverlapping(m.minimizers[0].as_ptr(), out_x, g.inner.num_vars());
                SmStatus::Ok
            }
            Err(e @ OracleError::CapExceeded { .. }) => fail(SmStatus::CapExceeded, e.to_string()),
            Err(e) => fail(SmStatus::Unavailable, e.to_string()),
        }
    })
}
