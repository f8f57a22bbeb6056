//! C ABI over the `safecover` crate.
//!
//! Scenarios, value grids and finished runs are opaque handles created by
//! `sc_*` constructors and released with the matching `sc_*_free`. Every
//! fallible call returns an [`ScStatus`]; on failure the message is kept
//! per thread and read with [`sc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use safecover::hj_grid::{self, FwRelativeState, HjProblem, SolveOptions, ValueGrid};
use safecover::policy::Mode;
use safecover::safety::{psi, RelativeState};
use safecover::sim::{self, builtin_scenario, RunOutput, Safety, Scenario, VehicleState};
use safecover::{Error, FwLimits, Vec2};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidPolygon = 3,
    InvalidParams = 4,
    NonFinite = 5,
    SingularTransform = 6,
    Degenerate = 7,
    OutOfBounds = 8,
    GridFormat = 9,
    Config = 10,
    UnknownScenario = 11,
    Io = 12,
    Csv = 13,
    BufferTooSmall = 14,
    Panic = 15,
}

/// Collision-avoidance mode selected by [`sc_scenario_set_safety`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScSafety {
    Off = 0,
    Analytic = 1,
    Grid = 2,
}

/// Fixed-wing input and speed limits.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScFwLimits {
    pub s_min: f64,
    pub s_max: f64,
    pub u_theta_max: f64,
    pub u_s_max: f64,
}

/// End-of-run digest.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScSummary {
    pub n: usize,
    pub steps: usize,
    pub collision_events: usize,
    pub final_cover: bool,
    pub final_cover_exact: bool,
    pub final_min_pairwise: f64,
    pub final_max_signed_dist: f64,
    pub final_flock_pos_sum: f64,
    pub final_flock_vel_sum: f64,
    pub final_max_rel_speed: f64,
    pub final_energy: f64,
    pub wall_time_s: f64,
}

/// One logged vehicle state. `a, b` are `(vx, vy)` for double integrators
/// and `(theta, s)` for fixed-wing vehicles; `u0, u1` are the applied
/// inputs in the same convention. `avoiding` is the index of the vehicle
/// being avoided, or -1 in coverage mode.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScRecord {
    pub t: f64,
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub a: f64,
    pub b: f64,
    pub u0: f64,
    pub u1: f64,
    pub avoiding: i64,
}

/// Opaque scenario handle.
pub struct ScScenario {
    inner: Scenario,
}

/// Opaque value-grid handle.
pub struct ScGrid {
    inner: ValueGrid,
}

/// Opaque handle to a finished run.
pub struct ScRun {
    inner: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Fail {
    Null(&'static str),
    Utf8(&'static str),
    BufferTooSmall { needed: usize },
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

impl Fail {
    fn status(&self) -> ScStatus {
        match self {
            Fail::Null(_) => ScStatus::NullArgument,
            Fail::Utf8(_) => ScStatus::InvalidUtf8,
            Fail::BufferTooSmall { .. } => ScStatus::BufferTooSmall,
            Fail::Core(e) => match e {
                Error::InvalidPolygon(_) => ScStatus::InvalidPolygon,
                Error::InvalidParams(_) => ScStatus::InvalidParams,
                Error::NonFinite(_) => ScStatus::NonFinite,
                Error::SingularTransform => ScStatus::SingularTransform,
                Error::Degenerate(_) => ScStatus::Degenerate,
                Error::OutOfBounds { .. } => ScStatus::OutOfBounds,
                Error::GridFormat(_) => ScStatus::GridFormat,
                Error::Config(_) => ScStatus::Config,
                Error::UnknownScenario(_) => ScStatus::UnknownScenario,
                Error::Io { .. } => ScStatus::Io,
                Error::Csv(_) => ScStatus::Csv,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Fail::Null(what) => format!("null pointer passed for `{what}`"),
            Fail::Utf8(what) => format!("`{what}` is not valid UTF-8"),
            Fail::BufferTooSmall { needed } => format!("buffer too small, {needed} needed"),
            Fail::Core(e) => e.to_string(),
        }
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ScStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ScStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message());
            fail.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            ScStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builtin scenario by name (`square`, `square_<n>`, `triangle`, ...).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_builtin(name: *const c_char, out: *mut *mut ScScenario) -> ScStatus {
    guard(|| {
        let inner = builtin_scenario(str_arg(name, "name")?)?;
        put(out, ScScenario { inner })
    })
}

/// Scenario parsed from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_from_toml(text: *const c_char, out: *mut *mut ScScenario) -> ScStatus {
    guard(|| {
        let inner = Scenario::from_toml_str(str_arg(text, "text")?)?;
        put(out, ScScenario { inner })
    })
}

/// Scenario read from a TOML file; relative grid paths resolve against the
/// file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_from_file(path: *const c_char, out: *mut *mut ScScenario) -> ScStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let inner = Scenario::from_file(&path)?;
        put(out, ScScenario { inner })
    })
}

/// # Safety
/// `scenario` must come from an `sc_scenario_*` constructor or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_free(scenario: *mut ScScenario) {
    free(scenario)
}

/// Number of vehicles, or 0 for NULL.
///
/// # Safety
/// `scenario` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_vehicle_count(scenario: *const ScScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.inner.n)
}

/// True for fixed-wing scenarios.
///
/// # Safety
/// `scenario` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_is_fixed_wing(scenario: *const ScScenario) -> bool {
    scenario
        .as_ref()
        .is_some_and(|s| s.inner.model == sim::Model::FixedWing)
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_set_seed(scenario: *mut ScScenario, seed: u64) -> ScStatus {
    guard(|| {
        mut_arg(scenario, "scenario")?.inner.seed = seed;
        Ok(())
    })
}

/// Sets the step and final time; the scenario is left unchanged when the
/// new values are invalid.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_set_horizon(scenario: *mut ScScenario, dt: f64, t_end: f64) -> ScStatus {
    guard(|| {
        let s = mut_arg(scenario, "scenario")?;
        let mut next = s.inner.clone();
        next.dt = dt;
        next.t_end = t_end;
        next.validate()?;
        s.inner = next;
        Ok(())
    })
}

/// Selects the avoidance mode. `grid_path` is only read for
/// `SC_SAFETY_GRID` and may be NULL to solve the default grid at run time.
///
/// # Safety
/// `scenario` must be a live handle; `grid_path` NULL or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_set_safety(
    scenario: *mut ScScenario,
    safety: ScSafety,
    grid_path: *const c_char,
) -> ScStatus {
    guard(|| {
        let s = mut_arg(scenario, "scenario")?;
        let mut next = s.inner.clone();
        next.safety = match safety {
            ScSafety::Off => Safety::Off,
            ScSafety::Analytic => Safety::Analytic,
            ScSafety::Grid => Safety::Grid {
                path: if grid_path.is_null() {
                    None
                } else {
                    Some(PathBuf::from(str_arg(grid_path, "grid_path")?))
                },
            },
        };
        next.validate()?;
        s.inner = next;
        Ok(())
    })
}

/// Writes the scenario as TOML into `buf` (NUL-terminated). `needed`
/// receives the required size including the NUL; with a short buffer the
/// call fails with `SC_STATUS_BUFFER_TOO_SMALL` and writes nothing.
///
/// # Safety
/// `buf` must hold `len` bytes or be NULL with `len == 0`; `needed` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_scenario_to_toml(
    scenario: *const ScScenario,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ScStatus {
    guard(|| {
        let text = ref_arg(scenario, "scenario")?.inner.to_toml_string();
        let size = text.len() + 1;
        if let Some(n) = needed.as_mut() {
            *n = size;
        }
        if len < size {
            return Err(Fail::BufferTooSmall { needed: size });
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast::<c_char>(), buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Solves the fixed-wing time-to-reach grid on the default resolution.
///
/// # Safety
/// `limits` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sc_grid_solve_default(
    c_r: f64,
    limits: *const ScFwLimits,
    out: *mut *mut ScGrid,
) -> ScStatus {
    guard(|| {
        let l = ref_arg(limits, "limits")?;
        let limits = FwLimits {
            s_min: l.s_min,
            s_max: l.s_max,
            u_theta_max: l.u_theta_max,
            u_s_max: l.u_s_max,
        };
        let inner = hj_grid::solve(&HjProblem::desk_default(c_r, limits), &SolveOptions::default())?;
        put(out, ScGrid { inner })
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sc_grid_load(path: *const c_char, out: *mut *mut ScGrid) -> ScStatus {
    guard(|| {
        let inner = ValueGrid::load(&PathBuf::from(str_arg(path, "path")?))?;
        put(out, ScGrid { inner })
    })
}

/// # Safety
/// `grid` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sc_grid_save(grid: *const ScGrid, path: *const c_char) -> ScStatus {
    guard(|| {
        let g = ref_arg(grid, "grid")?;
        g.inner.save(&PathBuf::from(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `grid` must come from an `sc_grid_*` constructor or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_grid_free(grid: *mut ScGrid) {
    free(grid)
}

/// Interpolated time to reach at the relative state `x[0..5]`
/// (`x1, x2, heading difference, evader speed, pursuer speed`).
///
/// # Safety
/// `grid` must be a live handle, `x` point to 5 doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn sc_grid_query(grid: *const ScGrid, x: *const f64, out: *mut f64) -> ScStatus {
    guard(|| {
        let g = ref_arg(grid, "grid")?;
        if x.is_null() {
            return Err(Fail::Null("x"));
        }
        let x = std::slice::from_raw_parts(x, 5);
        let v = g
            .inner
            .query(&FwRelativeState::new(x[0], x[1], x[2], x[3], x[4]))?;
        *mut_arg(out, "out")? = v;
        Ok(())
    })
}

/// Closed-form double-integrator time to collision of the relative state
/// `p = (px, py)`, `v = (vx, vy)`; `+inf` when no collision lies ahead.
#[no_mangle]
pub extern "C" fn sc_time_to_collision(px: f64, py: f64, vx: f64, vy: f64, c_r: f64) -> f64 {
    psi(&RelativeState::new(Vec2::new(px, py), Vec2::new(vx, vy)), c_r)
}

/// Runs a scenario. `grid` may be NULL; grid-safety scenarios then load
/// or solve their own grid.
///
/// # Safety
/// `scenario` must be a live handle, `grid` a live handle or NULL, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sc_run(scenario: *const ScScenario, grid: *const ScGrid, out: *mut *mut ScRun) -> ScStatus {
    guard(|| {
        let s = &ref_arg(scenario, "scenario")?.inner;
        let inner = match grid.as_ref() {
            Some(g) => sim::run_with_grid(s, Some(&g.inner))?,
            None => sim::run(s)?,
        };
        put(out, ScRun { inner })
    })
}

/// # Safety
/// `run` must come from [`sc_run`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_run_free(run: *mut ScRun) {
    free(run)
}

/// # Safety
/// `run` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sc_run_summary(run: *const ScRun, out: *mut ScSummary) -> ScStatus {
    guard(|| {
        let s = &ref_arg(run, "run")?.inner.summary;
        *mut_arg(out, "out")? = ScSummary {
            n: s.n,
            steps: s.steps,
            collision_events: s.collision_events,
            final_cover: s.final_cover,
            final_cover_exact: s.final_cover_exact,
            final_min_pairwise: s.final_min_pairwise,
            final_max_signed_dist: s.final_max_signed_dist,
            final_flock_pos_sum: s.final_flock_pos_sum,
            final_flock_vel_sum: s.final_flock_vel_sum,
            final_max_rel_speed: s.final_max_rel_speed,
            final_energy: s.final_energy,
            wall_time_s: s.wall_time_s,
        };
        Ok(())
    })
}

/// Number of trajectory records, or 0 for NULL.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn sc_run_record_count(run: *const ScRun) -> usize {
    run.as_ref().map_or(0, |r| r.inner.trajectory.len())
}

/// Copies up to `len` records starting at `offset` into `buf`; `written`
/// receives the number copied.
///
/// # Safety
/// `run` must be a live handle, `buf` hold `len` records and `written` be valid.
#[no_mangle]
pub unsafe extern "C" fn sc_run_records(
    run: *const ScRun,
    offset: usize,
    buf: *mut ScRecord,
    len: usize,
    written: *mut usize,
) -> ScStatus {
    guard(|| {
        let traj = &ref_arg(run, "run")?.inner.trajectory;
        let written = mut_arg(written, "written")?;
        let src = traj.get(offset..).unwrap_or(&[]);
        let count = src.len().min(len);
        if count > 0 && buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        for (k, r) in src[..count].iter().enumerate() {
            let (x, y, a, b) = match r.state {
                VehicleState::Di(s) => (s.p.x, s.p.y, s.v.x, s.v.y),
                VehicleState::Fw(s) => (s.p.x, s.p.y, s.theta, s.s),
            };
            *buf.add(k) = ScRecord {
                t: r.t,
                id: r.id,
                x,
                y,
                a,
                b,
                u0: r.u[0],
                u1: r.u[1],
                avoiding: match r.mode {
                    Mode::Coverage => -1,
                    Mode::Avoid(j) => j as i64,
                },
            };
        }
        *written = count;
        Ok(())
    })
}

/// Writes the run directory (CSV files, summary and scenario echo).
///
/// # Safety
/// `run` must be a live handle and `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sc_run_write(run: *const ScRun, dir: *const c_char) -> ScStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        sim::write_run(&r.inner, &PathBuf::from(str_arg(dir, "dir")?))?;
        Ok(())
    })
}
