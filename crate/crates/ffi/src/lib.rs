//! C interface to the planner.
//!
//! Scenarios and solutions are opaque handles created and freed through this
//! API. Every fallible call returns a [`SentinelStatus`]; on failure
//! `sentinel_last_error()` gives a message for the calling thread. Strings
//! returned to the caller must be released with `sentinel_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sentinel::engines::{solve, EngineConfig, EngineKind};
use sentinel::formulation::{export_lp, Model, ReductionMask, ReductionPolicy};
use sentinel::report::SolutionFile;
use sentinel::scenario::{cases, io, Scenario};
use sentinel::Error;

/// Result codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentinelStatus {
    Ok = 0,
    Error = 1,
    Infeasible = 2,
    ResourceLimit = 3,
    NullArgument = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentinelEngine {
    Exact = 0,
    Heuristic = 1,
    B0 = 2,
    Oracle = 3,
}

/// Opaque scenario handle.
pub struct SentinelScenario {
    inner: Scenario,
}

/// Opaque solution handle.
pub struct SentinelSolution {
    inner: SolutionFile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn from_error(e: Error) -> SentinelStatus {
    let status = match e.exit_code() {
        2 => SentinelStatus::Infeasible,
        3 => SentinelStatus::ResourceLimit,
        _ => SentinelStatus::Error,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> SentinelStatus) -> SentinelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SentinelStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            SentinelStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, SentinelStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(SentinelStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        SentinelStatus::InvalidArgument
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> SentinelStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            SentinelStatus::Ok
        }
        Err(_) => {
            set_error("output contains a NUL byte");
            SentinelStatus::Error
        }
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sentinel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_from_json(json: *const c_char, out: *mut *mut SentinelScenario) -> SentinelStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return SentinelStatus::NullArgument;
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match io::from_json(text) {
            Ok(sc) => {
                *out = Box::into_raw(Box::new(SentinelScenario { inner: sc }));
                SentinelStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The bundled 13x13 example scenario.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_example(out: *mut *mut SentinelScenario) -> SentinelStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return SentinelStatus::NullArgument;
        }
        *out = Box::into_raw(Box::new(SentinelScenario { inner: io::example() }));
        SentinelStatus::Ok
    })
}

/// Applies experiment preset `case_id` (1..5) in place. A negative `horizon`
/// keeps the preset's own horizon.
///
/// # Safety
/// `scenario` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_apply_case(scenario: *mut SentinelScenario, case_id: u8, horizon: i64) -> SentinelStatus {
    guard(|| {
        let Some(sc) = scenario.as_mut() else {
            set_error("null scenario");
            return SentinelStatus::NullArgument;
        };
        let t = if horizon < 0 { None } else { Some(horizon.min(u32::MAX as i64) as u32) };
        match cases::apply_case(&sc.inner, case_id, t) {
            Ok(next) => {
                sc.inner = next;
                SentinelStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets the action budget.
///
/// # Safety
/// `scenario` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_set_budget(scenario: *mut SentinelScenario, budget: f64) -> SentinelStatus {
    guard(|| {
        let Some(sc) = scenario.as_mut() else {
            set_error("null scenario");
            return SentinelStatus::NullArgument;
        };
        if !(budget >= 0.0) {
            set_error("budget must be non-negative");
            return SentinelStatus::InvalidArgument;
        }
        sc.inner.budget = budget;
        SentinelStatus::Ok
    })
}

/// Serialises the scenario as JSON.
///
/// # Safety
/// `scenario` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_to_json(scenario: *const SentinelScenario, out: *mut *mut c_char) -> SentinelStatus {
    guard(|| {
        let (Some(sc), false) = (scenario.as_ref(), out.is_null()) else {
            set_error("null argument");
            return SentinelStatus::NullArgument;
        };
        give_string(io::to_json(&sc.inner), out)
    })
}

/// Writes the 0-1 program for the scenario as LP text, with reductions applied.
///
/// # Safety
/// `scenario` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_export_lp(scenario: *const SentinelScenario, out: *mut *mut c_char) -> SentinelStatus {
    guard(|| {
        let (Some(sc), false) = (scenario.as_ref(), out.is_null()) else {
            set_error("null argument");
            return SentinelStatus::NullArgument;
        };
        let sc = &sc.inner;
        let built = sc.validate().and_then(|_| {
            let tb = sc.derive_tables();
            let mask = ReductionMask::compute(sc, &tb, ReductionPolicy::Safe)?;
            Model::build(sc, &tb, &mask)
        });
        match built {
            Ok(m) => give_string(export_lp(&m), out),
            Err(e) => from_error(e),
        }
    })
}

/// Frees a scenario; null is ignored.
///
/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sentinel_scenario_free(scenario: *mut SentinelScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Solves the scenario with the given engine.
///
/// # Safety
/// `scenario` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solve(scenario: *const SentinelScenario, engine: SentinelEngine, out: *mut *mut SentinelSolution) -> SentinelStatus {
    guard(|| {
        let (Some(sc), false) = (scenario.as_ref(), out.is_null()) else {
            set_error("null argument");
            return SentinelStatus::NullArgument;
        };
        let kind = match engine {
            SentinelEngine::Exact => EngineKind::Exact,
            SentinelEngine::Heuristic => EngineKind::Heuristic,
            SentinelEngine::B0 => EngineKind::B0,
            SentinelEngine::Oracle => EngineKind::Oracle,
        };
        match solve(&sc.inner, kind, &EngineConfig::default()) {
            Ok(sol) => {
                let file = SolutionFile::new(&sc.inner, None, sol);
                *out = Box::into_raw(Box::new(SentinelSolution { inner: file }));
                SentinelStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// First arrival time at the target, or -1 if the plan never arrives.
///
/// # Safety
/// `solution` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_time_to_target(solution: *const SentinelSolution) -> i64 {
    match solution.as_ref() {
        Some(s) => s.inner.plan.time_to_target.map_or(-1, i64::from),
        None => -1,
    }
}

/// Probability of evading detection, or NaN outside the confusion modes.
///
/// # Safety
/// `solution` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_ped(solution: *const SentinelSolution) -> f64 {
    solution.as_ref().and_then(|s| s.inner.plan.ped).unwrap_or(f64::NAN)
}

/// Number of knockout actions in the plan, or -1 for a null handle.
///
/// # Safety
/// `solution` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_knockouts(solution: *const SentinelSolution) -> i64 {
    solution.as_ref().map_or(-1, |s| s.inner.plan.knockouts.len() as i64)
}

/// 1 if the plan passed independent validation, 0 if not, -1 for null.
///
/// # Safety
/// `solution` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_feasible(solution: *const SentinelSolution) -> i32 {
    solution.as_ref().map_or(-1, |s| i32::from(s.inner.validation.feasible))
}

/// Serialises the solution in the command-line solution file format.
///
/// # Safety
/// `solution` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_to_json(solution: *const SentinelSolution, out: *mut *mut c_char) -> SentinelStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            set_error("null argument");
            return SentinelStatus::NullArgument;
        };
        give_string(s.inner.to_json(), out)
    })
}

/// Frees a solution; null is ignored.
///
/// # Safety
/// `solution` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sentinel_solution_free(solution: *mut SentinelSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Frees a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sentinel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(sentinel_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn example_round_trip() {
        unsafe {
            let mut sc = ptr::null_mut();
            assert_eq!(sentinel_scenario_example(&mut sc), SentinelStatus::Ok);
            assert_eq!(sentinel_scenario_apply_case(sc, 1, -1), SentinelStatus::Ok);
            let mut sol = ptr::null_mut();
            assert_eq!(sentinel_solve(sc, SentinelEngine::B0, &mut sol), SentinelStatus::Ok);
            assert_eq!(sentinel_solution_time_to_target(sol), 10);
            sentinel_solution_free(sol);
            assert_eq!(sentinel_solve(sc, SentinelEngine::Exact, &mut sol), SentinelStatus::Ok);
            assert_eq!(sentinel_solution_time_to_target(sol), 9);
            assert_eq!(sentinel_solution_knockouts(sol), 1);
            assert_eq!(sentinel_solution_feasible(sol), 1);
            assert!(sentinel_solution_ped(sol).is_nan());
            let mut text = ptr::null_mut();
            assert_eq!(sentinel_solution_to_json(sol, &mut text), SentinelStatus::Ok);
            let json = CStr::from_ptr(text).to_str().unwrap();
            assert!(json.contains("\"schema_version\": 1"));
            sentinel_string_free(text);
            sentinel_solution_free(sol);

            let mut js = ptr::null_mut();
            assert_eq!(sentinel_scenario_to_json(sc, &mut js), SentinelStatus::Ok);
            let mut again = ptr::null_mut();
            assert_eq!(sentinel_scenario_from_json(js, &mut again), SentinelStatus::Ok);
            sentinel_string_free(js);
            let mut lp = ptr::null_mut();
            assert_eq!(sentinel_export_lp(again, &mut lp), SentinelStatus::Ok);
            assert!(CStr::from_ptr(lp).to_str().unwrap().trim_end().ends_with("End"));
            sentinel_string_free(lp);
            sentinel_scenario_free(again);
            sentinel_scenario_free(sc);
        }
    }

    #[test]
    fn errors_are_reported() {
        unsafe {
            let mut sc = ptr::null_mut();
            let bad = CString::new("{\"version\": 1}").unwrap();
            assert_eq!(sentinel_scenario_from_json(bad.as_ptr(), &mut sc), SentinelStatus::Error);
            assert!(last_error().contains("missing field"), "{}", last_error());
            assert!(sc.is_null());
            assert_eq!(sentinel_scenario_from_json(ptr::null(), &mut sc), SentinelStatus::NullArgument);
            assert_eq!(sentinel_scenario_apply_case(ptr::null_mut(), 1, -1), SentinelStatus::NullArgument);

            sentinel_scenario_example(&mut sc);
            assert_eq!(sentinel_scenario_apply_case(sc, 9, -1), SentinelStatus::Error);
            assert_eq!(sentinel_scenario_apply_case(sc, 1, 5), SentinelStatus::Ok);
            let mut sol = ptr::null_mut();
            assert_eq!(sentinel_solve(sc, SentinelEngine::Exact, &mut sol), SentinelStatus::Infeasible);
            assert!(sol.is_null());
            assert_eq!(sentinel_scenario_set_budget(sc, -1.0), SentinelStatus::InvalidArgument);
            sentinel_scenario_free(sc);
            assert_eq!(sentinel_solution_time_to_target(ptr::null()), -1);
            sentinel_scenario_free(ptr::null_mut());
            sentinel_solution_free(ptr::null_mut());
        }
    }
}
