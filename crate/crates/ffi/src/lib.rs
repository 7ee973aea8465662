//! C ABI over `threshold_contact`.
//!
//! Every fallible function returns a [`TcStatus`] and writes results through
//! out-pointers. On failure a message is kept per thread and can be read with
//! [`tc_last_error`]. Graphs and schedules cross the boundary as opaque
//! handles that the caller releases with the matching `_free` function.
//! Panics are caught and reported as [`TcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use threshold_contact::clocks::{build_schedule, ClockSchedule};
use threshold_contact::experiments::{self, CriticalParams, Estimate, Family, OBSERVED_VERTEX};
use threshold_contact::graphs::{build_torus, build_tree, FiniteGraph, GraphSpec, RootVariant};
use threshold_contact::moments;
use threshold_contact::processes::coupled_run_eta_xi;
use threshold_contact::walk::{self, TailMode};
use threshold_contact::Error;

/// Result codes.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GraphSpec = 3,
    WrongGraph = 4,
    ResourceLimit = 5,
    Recurrent = 6,
    HypothesisFails = 7,
    BelowThreshold = 8,
    InvalidBracket = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for TcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::ObservationTime { .. } | Error::OutsideTable(_) => {
                TcStatus::InvalidArgument
            }
            Error::GraphSpec { .. } => TcStatus::GraphSpec,
            Error::WrongGraph { .. } => TcStatus::WrongGraph,
            Error::ResourceLimit { .. } => TcStatus::ResourceLimit,
            Error::Recurrent { .. } => TcStatus::Recurrent,
            Error::HypothesisFails { .. } => TcStatus::HypothesisFails,
            Error::BelowThreshold { .. } => TcStatus::BelowThreshold,
            Error::InvalidBracket { .. } => TcStatus::InvalidBracket,
            Error::ScheduleFormat(_) | Error::Io(_) => TcStatus::Io,
        }
    }
}

/// Opaque graph handle.
pub struct TcGraph(FiniteGraph);

/// Opaque clock schedule handle.
pub struct TcSchedule(ClockSchedule);

/// Monte Carlo estimate.
#[repr(C)]
#[derive(Copy, Clone, Debug, Default)]
pub struct TcEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: u64,
}

impl From<Estimate> for TcEstimate {
    fn from(e: Estimate) -> Self {
        TcEstimate {
            value: e.value,
            std_error: e.std_error,
            replicas: e.replicas,
        }
    }
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default)]
pub struct TcDuality {
    pub p_eta: TcEstimate,
    pub p_dual: TcEstimate,
    pub z_score: f64,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default)]
pub struct TcGreen {
    pub d: usize,
    pub terms: u64,
    pub value: f64,
    pub tail: f64,
    pub uncertainty: f64,
    /// `(G - 1)/G`
    pub f_e1: f64,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default)]
pub struct TcBounds {
    pub lower: f64,
    /// NaN when the upper bound's hypothesis fails.
    pub upper: f64,
    pub has_upper: bool,
}

#[repr(C)]
#[derive(Copy, Clone, Debug, Default)]
pub struct TcCritical {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub evaluations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), TcStatus>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TcStatus::Panic, msg)
        }
    }
}

fn lib(e: Error) -> TcStatus {
    fail(TcStatus::from(&e), e.to_string())
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), TcStatus> {
    if p.is_null() {
        Err(fail(TcStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or a valid pointer to `T`.
unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, TcStatus> {
    nonnull(p, name)?;
    Ok(&*p)
}

/// # Safety
/// `out` must be null or valid for writes.
unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), TcStatus> {
    nonnull(out, name)?;
    out.write(value);
    Ok(())
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], TcStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    nonnull(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be null or point to `n` writable values.
unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, name: &str) -> Result<&'a mut [T], TcStatus> {
    if n == 0 {
        return Ok(&mut []);
    }
    nonnull(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, n))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, TcStatus> {
    nonnull(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TcStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// graphs

fn emit_graph(out: *mut *mut TcGraph, g: FiniteGraph) -> Result<(), TcStatus> {
    // SAFETY: checked non-null by the caller of this helper
    unsafe { write(out, Box::into_raw(Box::new(TcGraph(g))), "out") }
}

/// Builds a graph from a spec string such as `"torus:d=2,L=32"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_graph_from_spec(
    spec: *const c_char,
    out: *mut *mut TcGraph,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let s = string(spec, "spec")?;
        let g = s
            .parse::<GraphSpec>()
            .and_then(|g| g.build())
            .map_err(lib)?;
        emit_graph(out, g)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_graph_torus(d: usize, side: usize, out: *mut *mut TcGraph) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        emit_graph(out, build_torus(d, side).map_err(lib)?)
    })
}

/// Tree with `n` sons per vertex; `son_only_root` selects the root variant.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_graph_tree(
    n: usize,
    depth: usize,
    son_only_root: bool,
    out: *mut *mut TcGraph,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let root = if son_only_root {
            RootVariant::SonOnly
        } else {
            RootVariant::FullDegree
        };
        emit_graph(out, build_tree(n, depth, root).map_err(lib)?)
    })
}

/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_graph_vertex_count(graph: *const TcGraph, out: *mut usize) -> TcStatus {
    guard(|| write(out, borrow(graph, "graph")?.0.vertex_count(), "out"))
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_graph_free(graph: *mut TcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

// ---------------------------------------------------------------------------
// clocks

/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_build(
    graph: *const TcGraph,
    lambda: f64,
    horizon: f64,
    seed: u64,
    out: *mut *mut TcSchedule,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = borrow(graph, "graph")?;
        let s = build_schedule(&g.0, lambda, horizon, seed).map_err(lib)?;
        write(out, Box::into_raw(Box::new(TcSchedule(s))), "out")
    })
}

/// Number of clock rings in the schedule.
///
/// # Safety
/// `schedule` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_len(schedule: *const TcSchedule, out: *mut usize) -> TcStatus {
    guard(|| write(out, borrow(schedule, "schedule")?.0.len(), "out"))
}

/// Writes the versioned binary dump to `path`.
///
/// # Safety
/// `schedule` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_write(
    schedule: *const TcSchedule,
    path: *const c_char,
) -> TcStatus {
    guard(|| {
        let s = borrow(schedule, "schedule")?;
        let path = string(path, "path")?;
        let file = std::fs::File::create(path).map_err(|e| lib(e.into()))?;
        s.0.write_binary(std::io::BufWriter::new(file)).map_err(lib)
    })
}

/// Reads a binary dump written by [`tc_schedule_write`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_read(
    path: *const c_char,
    out: *mut *mut TcSchedule,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let path = string(path, "path")?;
        let file = std::fs::File::open(path).map_err(|e| lib(e.into()))?;
        let s = ClockSchedule::read_binary(std::io::BufReader::new(file)).map_err(lib)?;
        write(out, Box::into_raw(Box::new(TcSchedule(s))), "out")
    })
}

/// # Safety
/// `schedule` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tc_schedule_free(schedule: *mut TcSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

// ---------------------------------------------------------------------------
// processes and experiments

/// Runs η and ξ from all ones on `schedule` and writes, per observation
/// time, the number of vertices where `η_t(x) != 1{ξ_t(x) > 0}`.
///
/// # Safety
/// Handles must be live; `times` and `out_counts` must hold `n_times` values.
#[no_mangle]
pub unsafe extern "C" fn tc_coupling_mismatches(
    schedule: *const TcSchedule,
    graph: *const TcGraph,
    times: *const f64,
    n_times: usize,
    out_counts: *mut usize,
) -> TcStatus {
    guard(|| {
        let s = borrow(schedule, "schedule")?;
        let g = borrow(graph, "graph")?;
        let times = slice(times, n_times, "times")?;
        let out = slice_mut(out_counts, n_times, "out_counts")?;
        let counts = coupled_run_eta_xi(&s.0, &g.0, times).map_err(lib)?;
        out.copy_from_slice(&counts);
        Ok(())
    })
}

/// `P(η_t(x) = 1)` from all ones at the observed vertex (origin or root).
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_survival_probability(
    graph: *const TcGraph,
    lambda: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    out: *mut TcEstimate,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = borrow(graph, "graph")?;
        let e = experiments::survival_probability(&g.0, lambda, t, OBSERVED_VERTEX, replicas, seed)
            .map_err(lib)?;
        write(out, e.into(), "out")
    })
}

/// `P(A_t ≠ ∅)` from the observed vertex; sets reaching `cap` count as alive.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_dual_survival(
    graph: *const TcGraph,
    lambda: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    cap: usize,
    out: *mut TcEstimate,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = borrow(graph, "graph")?;
        let e = experiments::dual_survival(&g.0, lambda, t, OBSERVED_VERTEX, replicas, seed, cap)
            .map_err(lib)?;
        write(out, e.into(), "out")
    })
}

/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_duality_check(
    graph: *const TcGraph,
    lambda: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    out: *mut TcDuality,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = borrow(graph, "graph")?;
        let c = experiments::duality_check(&g.0, OBSERVED_VERTEX, lambda, t, replicas, seed)
            .map_err(lib)?;
        let d = TcDuality {
            p_eta: c.p_eta.into(),
            p_dual: c.p_dual.into(),
            z_score: c.z_score,
        };
        write(out, d, "out")
    })
}

/// Bisection on dual survival at time `t` for the rate where it crosses
/// `threshold`. A finite-size, finite-time proxy for the critical value.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_critical_estimate(
    graph: *const TcGraph,
    lo: f64,
    hi: f64,
    threshold: f64,
    tol: f64,
    t: f64,
    replicas: u64,
    seed: u64,
    cap: usize,
    out: *mut TcCritical,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = borrow(graph, "graph")?;
        let p = CriticalParams {
            t,
            replicas,
            threshold,
            tol,
            seed,
            cap,
        };
        let c = experiments::critical_estimate(&g.0, (lo, hi), OBSERVED_VERTEX, p).map_err(lib)?;
        let r = TcCritical {
            lo: c.lo,
            hi: c.hi,
            estimate: c.estimate,
            evaluations: c.evaluations.len(),
        };
        write(out, r, "out")
    })
}

// ---------------------------------------------------------------------------
// walk, moments, bounds

/// `G_d(0,0)` from `terms` series terms plus a local-CLT tail
/// (`paper_tail = false`) or the closed-form tail bounds (`true`).
/// `terms = 0` selects the default length.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_green_function(
    d: usize,
    terms: u64,
    paper_tail: bool,
    out: *mut TcGreen,
) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        let n = if terms == 0 {
            walk::default_terms(d)
        } else {
            terms
        };
        let mode = if paper_tail {
            TailMode::PaperBounds
        } else {
            TailMode::LocalClt
        };
        let g = walk::green_function(d, n, mode).map_err(lib)?;
        let r = TcGreen {
            d,
            terms: n,
            value: g.value,
            tail: g.tail,
            uncertainty: g.uncertainty,
            f_e1: (g.value - 1.0) / g.value,
        };
        write(out, r, "out")
    })
}

/// `F_d(e_1)`, 1 for recurrent dimensions.
///
/// # Safety
/// `value` and `uncertainty` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_hitting_prob_e1(
    d: usize,
    value: *mut f64,
    uncertainty: *mut f64,
) -> TcStatus {
    guard(|| {
        nonnull(value, "value")?;
        nonnull(uncertainty, "uncertainty")?;
        let h = walk::hitting_prob_e1(d).map_err(lib)?;
        write(value, h.value, "value")?;
        write(uncertainty, h.uncertainty, "uncertainty")
    })
}

fn bounds_row(family: Family<'_>) -> Result<TcBounds, TcStatus> {
    let row = experiments::bounds_report(family).map_err(lib)?.remove(0);
    Ok(TcBounds {
        lower: row.lower,
        upper: row.upper.unwrap_or(f64::NAN),
        has_upper: row.upper.is_some(),
    })
}

/// Critical-value bounds for `Z^d`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_bounds_lattice(d: usize, out: *mut TcBounds) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        write(out, bounds_row(Family::Lattice(&[d]))?, "out")
    })
}

/// Critical-value bounds for the tree with `n` sons per vertex.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_bounds_tree(n: usize, out: *mut TcBounds) -> TcStatus {
    guard(|| {
        nonnull(out, "out")?;
        write(out, bounds_row(Family::Tree(&[n]))?, "out")
    })
}

/// Truncated `G_t(0)` on the box of radius `radius` at ascending `times`,
/// with the mass on the two outer shells in `out_leakage`.
///
/// # Safety
/// `times`, `out_g0` and `out_leakage` must hold `n_times` values.
#[no_mangle]
pub unsafe extern "C" fn tc_second_moment(
    d: usize,
    lambda: f64,
    radius: u32,
    times: *const f64,
    n_times: usize,
    out_g0: *mut f64,
    out_leakage: *mut f64,
) -> TcStatus {
    guard(|| {
        let times = slice(times, n_times, "times")?;
        let g0 = slice_mut(out_g0, n_times, "out_g0")?;
        let leak = slice_mut(out_leakage, n_times, "out_leakage")?;
        let pts = moments::integrate_second_moment(d, lambda, radius, times).map_err(lib)?;
        for (i, p) in pts.iter().enumerate() {
            g0[i] = p.g0;
            leak[i] = p.leakage;
        }
        Ok(())
    })
}

/// Structural checks on the truncated `Q`; `out_pass` is set when all hold.
///
/// # Safety
/// `out_pass` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_qcheck(
    d: usize,
    lambda: f64,
    radius: u32,
    out_pass: *mut bool,
) -> TcStatus {
    guard(|| {
        nonnull(out_pass, "out_pass")?;
        let q = moments::build_q(d, lambda, radius).map_err(lib)?;
        let c = moments::qcheck(&q, moments::QCHECK_MAX_COLUMNS).map_err(lib)?;
        write(out_pass, c.all_pass(), "out_pass")
    })
}
