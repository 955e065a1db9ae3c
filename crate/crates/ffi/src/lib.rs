//! C interface to `prstl`.
//!
//! Objects are opaque handles created by `*_parse` / `*_from_toml` and
//! released with the matching `*_free`. Every fallible function returns a
//! [`PrstlStatus`]; on failure, [`prstl_last_error_message`] describes the
//! error for the calling thread. Strings returned through out-parameters are
//! owned by the caller and must be released with [`prstl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use prstl::formula::{parse, Formula};
use prstl::semantics::{Mode, PredicateTable, Program};
use prstl::sim::{run_mission, Scenario};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrstlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    EvalError = 5,
    ScenarioError = 6,
    SimulationError = 7,
    Panic = 8,
}

/// Parsed formula.
pub struct PrstlFormula {
    inner: Formula,
}

/// Parsed scenario.
pub struct PrstlScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(PrstlStatus, String);

fn fail<T>(status: PrstlStatus, message: impl ToString) -> Result<T, Fail> {
    Err(Fail(status, message.to_string()))
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> PrstlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PrstlStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PrstlStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(PrstlStatus::NullPointer, "null string argument");
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PrstlStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref()
        .map_or_else(|| fail(PrstlStatus::NullPointer, "null handle"), Ok)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return fail(PrstlStatus::NullPointer, "null output pointer");
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(PrstlStatus::InvalidArgument, "string contains NUL"))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn prstl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `text` into a new formula handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_parse(
    text: *const c_char,
    out: *mut *mut PrstlFormula,
) -> PrstlStatus {
    guard(|| {
        let text = read_str(text)?;
        let inner = parse(text).or_else(|e| fail(PrstlStatus::ParseError, e))?;
        write_out(out, Box::into_raw(Box::new(PrstlFormula { inner })))
    })
}

/// Releases a formula handle. NULL is ignored.
///
/// # Safety
/// `formula` must come from [`prstl_formula_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_free(formula: *mut PrstlFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Run length needed to evaluate the formula without truncation.
///
/// # Safety
/// `formula` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_horizon(
    formula: *const PrstlFormula,
    out: *mut u64,
) -> PrstlStatus {
    guard(|| write_out(out, handle(formula)?.inner.horizon()))
}

/// Whether every temporal window of the formula starts at 0.
///
/// # Safety
/// `formula` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_is_synthesizable(
    formula: *const PrstlFormula,
    out: *mut bool,
) -> PrstlStatus {
    guard(|| write_out(out, handle(formula)?.inner.check_synthesizable().is_empty()))
}

/// Canonical text of the formula; free with [`prstl_string_free`].
///
/// # Safety
/// `formula` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_to_string(
    formula: *const PrstlFormula,
    out: *mut *mut c_char,
) -> PrstlStatus {
    guard(|| {
        let text = to_c_string(handle(formula)?.inner.to_string())?;
        write_out(out, text)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn prstl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates the formula at time `t` over a predicate table.
///
/// `names` holds `n_predicates` predicate names. `values` is row-major with
/// one row per predicate: the probability of predicate `p` at time `k` is
/// `values[p * n_times + k]`. With `relaxed`, windows past the last time are
/// truncated. Event formulas yield a probability; instance formulas yield 0
/// or 1.
///
/// # Safety
/// `names` must point to `n_predicates` NUL-terminated strings, `values` to
/// `n_predicates * n_times` doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_formula_eval(
    formula: *const PrstlFormula,
    names: *const *const c_char,
    n_predicates: usize,
    values: *const f64,
    n_times: usize,
    t: usize,
    relaxed: bool,
    out: *mut f64,
) -> PrstlStatus {
    guard(|| {
        let formula = &handle(formula)?.inner;
        if n_predicates > 0 && (names.is_null() || values.is_null()) {
            return fail(PrstlStatus::NullPointer, "null table pointer");
        }
        if n_times == 0 {
            return fail(PrstlStatus::InvalidArgument, "table has no time steps");
        }
        let mut labels = Vec::with_capacity(n_predicates);
        let mut columns = Vec::with_capacity(n_predicates);
        for p in 0..n_predicates {
            labels.push(read_str(*names.add(p))?.to_owned());
            columns.push(std::slice::from_raw_parts(values.add(p * n_times), n_times).to_vec());
        }
        let table = PredicateTable::new(labels, columns, None)
            .or_else(|e| fail(PrstlStatus::InvalidArgument, e))?;
        let program =
            Program::compile(formula, table.names()).or_else(|e| fail(PrstlStatus::EvalError, e))?;
        let mode = if relaxed { Mode::Relaxed } else { Mode::Exact };
        let value = program
            .score(&table, t, mode)
            .or_else(|e| fail(PrstlStatus::EvalError, e))?;
        write_out(out, value)
    })
}

/// Parses a TOML scenario into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut PrstlScenario,
) -> PrstlStatus {
    guard(|| {
        let text = read_str(text)?;
        let inner = Scenario::from_toml(text).or_else(|e| fail(PrstlStatus::ScenarioError, e))?;
        inner
            .prepare()
            .or_else(|e| fail(PrstlStatus::ScenarioError, e))?;
        write_out(out, Box::into_raw(Box::new(PrstlScenario { inner })))
    })
}

/// Replaces the scenario's random seed.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn prstl_scenario_set_seed(
    scenario: *mut PrstlScenario,
    seed: u64,
) -> PrstlStatus {
    guard(|| match scenario.as_mut() {
        Some(s) => {
            s.inner.seed = seed;
            Ok(())
        }
        None => fail(PrstlStatus::NullPointer, "null handle"),
    })
}

/// Releases a scenario handle. NULL is ignored.
///
/// # Safety
/// `scenario` must come from [`prstl_scenario_from_toml`] and not be used
/// again.
#[no_mangle]
pub unsafe extern "C" fn prstl_scenario_free(scenario: *mut PrstlScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the closed-loop mission and returns its trace as newline-delimited
/// JSON; free with [`prstl_string_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prstl_scenario_simulate(
    scenario: *const PrstlScenario,
    out: *mut *mut c_char,
) -> PrstlStatus {
    guard(|| {
        let trace = run_mission(&handle(scenario)?.inner)
            .or_else(|e| fail(PrstlStatus::SimulationError, e))?;
        write_out(out, to_c_string(trace.to_ndjson())?)
    })
}
