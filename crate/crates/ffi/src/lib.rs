//! C ABI over the simulation library.
//!
//! Every fallible call returns an [`FtStatus`]; on failure the message is kept
//! per thread and can be fetched with [`ft_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ftform::graph::{certificate, parse_edge_list, DirectedLeaderGraph, GraphError};
use ftform::numerics::nussbaum;
use ftform::scenario::{export_csv, load_scenario, preset, run, RunResult, RunStatus, Scenario, ScenarioError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    Graph = 6,
    BufferTooSmall = 7,
    NotFound = 8,
    Panic = 9,
}

/// Outcome of a simulation run, mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtRunStatus {
    Converged = 0,
    Diverged = 2,
    Inconclusive = 3,
}

/// Opaque leader-follower graph.
pub struct FtGraph(DirectedLeaderGraph);

/// Opaque scenario definition.
pub struct FtScenario(Scenario);

/// Opaque finished run.
pub struct FtRun(RunResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: FtStatus, msg: impl Into<String>) -> FtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn scenario_status(e: &ScenarioError) -> FtStatus {
    match e {
        ScenarioError::Parse { .. } => FtStatus::Parse,
        ScenarioError::Validation { .. } | ScenarioError::UnknownPreset(_) => FtStatus::Validation,
        ScenarioError::Graph(_) => FtStatus::Graph,
        ScenarioError::Io { .. } | ScenarioError::Exists(_) => FtStatus::Io,
        ScenarioError::Trace(_) | ScenarioError::Plot(_) => FtStatus::Io,
    }
}

fn graph_status(e: &GraphError) -> FtStatus {
    match e {
        GraphError::Io(_) => FtStatus::Io,
        _ => FtStatus::Graph,
    }
}

fn guarded(f: impl FnOnce() -> FtStatus) -> FtStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(FtStatus::Panic, "internal panic"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, FtStatus> {
    if p.is_null() {
        return Err(fail(FtStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(FtStatus::InvalidUtf8, "argument is not valid UTF-8"))
}

fn store<T>(out: *mut *mut T, value: T) -> FtStatus {
    // SAFETY: caller checked `out` for null
    unsafe { *out = Box::into_raw(Box::new(value)) };
    FtStatus::Ok
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ft_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `N(k) = exp(k^2) cos(pi k / 2) + 1`.
#[no_mangle]
pub extern "C" fn ft_nussbaum(kappa: f64) -> f64 {
    nussbaum(kappa)
}

/// Parse an edge list (`from to weight` per line, node 0 is the leader).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_graph_parse(text: *const c_char, out: *mut *mut FtGraph) -> FtStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FtStatus::NullPointer, "null output handle");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_edge_list(text) {
            Ok(g) => store(out, FtGraph(g)),
            Err(e) => fail(graph_status(&e), e.to_string()),
        }
    })
}

/// Number of followers in the graph, 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_graph_followers(g: *const FtGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n_followers())
}

/// Solve `H^T pi = 1` and the smallest eigenvalue of `Xi`. `pi` receives
/// `len` entries and `len` must equal the follower count.
///
/// # Safety
/// `g` must be a live handle, `pi` must hold `len` doubles and `lambda_min`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_graph_certificate(
    g: *const FtGraph,
    pi: *mut f64,
    len: usize,
    lambda_min: *mut f64,
) -> FtStatus {
    guarded(|| {
        let Some(g) = g.as_ref() else { return fail(FtStatus::NullPointer, "null graph") };
        if pi.is_null() || lambda_min.is_null() {
            return fail(FtStatus::NullPointer, "null output buffer");
        }
        let n = g.0.n_followers();
        if len < n {
            return fail(FtStatus::BufferTooSmall, format!("pi needs {n} entries, got {len}"));
        }
        match certificate(&g.0) {
            Ok(c) => {
                ptr::copy_nonoverlapping(c.pi.as_ptr(), pi, n);
                *lambda_min = c.lambda_min_xi;
                FtStatus::Ok
            }
            Err(e) => fail(graph_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `g` must be null or a handle from [`ft_graph_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_graph_free(g: *mut FtGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Built-in scenario by name (`paper-5a`, `paper-5b`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_scenario_preset(name: *const c_char, out: *mut *mut FtScenario) -> FtStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FtStatus::NullPointer, "null output handle");
        }
        let name = match str_arg(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match preset(name) {
            Ok(sc) => store(out, FtScenario(sc)),
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// Load and validate a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_scenario_load(path: *const c_char, out: *mut *mut FtScenario) -> FtStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FtStatus::NullPointer, "null output handle");
        }
        let path = match str_arg(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_scenario(Path::new(path)) {
            Ok(sc) => store(out, FtScenario(sc)),
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

unsafe fn modify_scenario(sc: *mut FtScenario, f: impl FnOnce(Scenario) -> Scenario) -> FtStatus {
    guarded(|| {
        let Some(sc) = sc.as_mut() else { return fail(FtStatus::NullPointer, "null scenario") };
        let next = f(sc.0.clone());
        match next.validate() {
            Ok(()) => {
                sc.0 = next;
                FtStatus::Ok
            }
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// Override the horizon; the scenario is unchanged on error.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_scenario_set_t_end(sc: *mut FtScenario, t_end: f64) -> FtStatus {
    modify_scenario(sc, |s| s.with_t_end(t_end))
}

/// Override the integration step, keeping the logging rate.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_scenario_set_step(sc: *mut FtScenario, step: f64) -> FtStatus {
    modify_scenario(sc, |s| s.with_step(step))
}

/// # Safety
/// `sc` must be null or a scenario handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_scenario_free(sc: *mut FtScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Simulate a scenario. A diverged run still succeeds and yields a handle
/// holding the partial trace.
///
/// # Safety
/// `sc` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_run(sc: *const FtScenario, out: *mut *mut FtRun) -> FtStatus {
    guarded(|| {
        let Some(sc) = sc.as_ref() else { return fail(FtStatus::NullPointer, "null scenario") };
        if out.is_null() {
            return fail(FtStatus::NullPointer, "null output handle");
        }
        match run(&sc.0) {
            Ok(r) => store(out, FtRun(r)),
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be a live handle and `status` valid.
#[no_mangle]
pub unsafe extern "C" fn ft_run_status(r: *const FtRun, status: *mut FtRunStatus) -> FtStatus {
    let (Some(r), false) = (r.as_ref(), status.is_null()) else {
        return fail(FtStatus::NullPointer, "null argument");
    };
    *status = match r.0.status {
        RunStatus::Converged => FtRunStatus::Converged,
        RunStatus::Diverged => FtRunStatus::Diverged,
        RunStatus::Inconclusive => FtRunStatus::Inconclusive,
    };
    FtStatus::Ok
}

/// Number of logged samples, 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ft_run_samples(r: *const FtRun) -> usize {
    r.as_ref().map_or(0, |r| r.0.trace.len())
}

/// Copy a named channel (`t` for time, otherwise e.g. `agent1.track1[0]`)
/// into `buf`. `written` receives the sample count; with a short buffer the
/// call fails with `BufferTooSmall` and still reports the needed size.
///
/// # Safety
/// `r` must be a live handle, `name` NUL-terminated, `buf` must hold `cap`
/// doubles (or be null when `cap` is 0) and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ft_run_channel(
    r: *const FtRun,
    name: *const c_char,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> FtStatus {
    guarded(|| {
        let Some(r) = r.as_ref() else { return fail(FtStatus::NullPointer, "null run") };
        if written.is_null() {
            return fail(FtStatus::NullPointer, "null length output");
        }
        let name = match str_arg(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let data = if name == "t" { Some(r.0.trace.times.clone()) } else { r.0.trace.channel(name) };
        let Some(data) = data else { return fail(FtStatus::NotFound, format!("no channel `{name}`")) };
        *written = data.len();
        if cap < data.len() || (buf.is_null() && !data.is_empty()) {
            return fail(FtStatus::BufferTooSmall, format!("channel has {} samples, buffer {cap}", data.len()));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        FtStatus::Ok
    })
}

/// Write the trace CSV. Existing files are overwritten.
///
/// # Safety
/// `r` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ft_run_export_csv(r: *const FtRun, path: *const c_char) -> FtStatus {
    guarded(|| {
        let Some(r) = r.as_ref() else { return fail(FtStatus::NullPointer, "null run") };
        let path = match str_arg(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match export_csv(&r.0.trace, Path::new(path)) {
            Ok(()) => FtStatus::Ok,
            Err(e) => fail(scenario_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `r` must be null or a run handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ft_run_free(r: *mut FtRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
