//! C interface to the otmorph solver.
//!
//! Every function returns an `OtmStatus`; on failure a message for the
//! calling thread is available from `otm_last_error`. Handles are opaque and
//! must be released with the matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use otmorph::engine::{self, Model, Solution, SolverConfig, TvKind};
use otmorph::grid::{BoundaryKind, GridSpec};
use otmorph::prox::{prox_jp_in_place, ProxParams};
use otmorph::OtError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidGrid = 2,
    ShapeMismatch = 3,
    InvalidConfig = 4,
    InvalidArgument = 5,
    Unsupported = 6,
    NonFinite = 7,
    Io = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtmBoundary {
    Mirror = 0,
    Periodic = 1,
}

impl From<OtmBoundary> for BoundaryKind {
    fn from(b: OtmBoundary) -> Self {
        match b {
            OtmBoundary::Mirror => BoundaryKind::Mirror,
            OtmBoundary::Periodic => BoundaryKind::Periodic,
        }
    }
}

/// Grid shape: spatial axes, time steps and boundary conditions.
pub struct OtmGrid(GridSpec);

/// Solver settings; created with the defaults of `otm_config_new`.
pub struct OtmConfig(SolverConfig);

/// Frames and run statistics of a finished solve.
pub struct OtmSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &OtError) -> OtmStatus {
    match e {
        OtError::InvalidGrid(_) => OtmStatus::InvalidGrid,
        OtError::ShapeMismatch { .. } => OtmStatus::ShapeMismatch,
        OtError::InvalidConfig(_) => OtmStatus::InvalidConfig,
        OtError::InvalidArgument(_) | OtError::SizeCap { .. } => OtmStatus::InvalidArgument,
        OtError::Unsupported(_) => OtmStatus::Unsupported,
        OtError::NonFinite(_) => OtmStatus::NonFinite,
        _ => OtmStatus::Io,
    }
}

struct Failure(OtmStatus, String);

impl From<OtError> for Failure {
    fn from(e: OtError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OtmStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OtmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OtmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            OtmStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(Failure(
            OtmStatus::ShapeMismatch,
            format!("{what}: expected {expected} values, got {got}"),
        ));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn otm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Why the latest call on this thread failed; empty after a successful call.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn otm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a grid with 1 to 3 spatial axes; a third axis is the colour axis
/// and must have length 3.
#[no_mangle]
pub unsafe extern "C" fn otm_grid_new(
    dims: *const usize,
    ndims: usize,
    time_steps: usize,
    spatial_boundary: OtmBoundary,
    color_boundary: OtmBoundary,
    out: *mut *mut OtmGrid,
) -> OtmStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        if dims.is_null() && ndims > 0 {
            return Err(null("dims"));
        }
        let dims = if ndims == 0 { &[][..] } else { slice::from_raw_parts(dims, ndims) };
        let grid = GridSpec::new(dims.to_vec(), time_steps, spatial_boundary.into(), color_boundary.into())?;
        *out = Box::into_raw(Box::new(OtmGrid(grid)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn otm_grid_free(grid: *mut OtmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of values in one frame.
#[no_mangle]
pub unsafe extern "C" fn otm_grid_cells(grid: *const OtmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.cells())
}

/// Creates a configuration for the constrained model with p = 2, σ = 50,
/// τ = 0.99/σ, θ = 1 and 2000 iterations.
#[no_mangle]
pub unsafe extern "C" fn otm_config_new(out: *mut *mut OtmConfig) -> OtmStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = Box::into_raw(Box::new(OtmConfig(SolverConfig::default())));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn otm_config_free(config: *mut OtmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn update(config: *mut OtmConfig, f: impl FnOnce(&mut SolverConfig)) -> OtmStatus {
    guard(|| {
        let cfg = as_mut(config, "config")?;
        let mut next = cfg.0;
        f(&mut next);
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// Switches to the constrained model.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_constrained(config: *mut OtmConfig) -> OtmStatus {
    update(config, |c| c.model = Model::Constrained)
}

/// Switches to the penalised model with weight `lambda > 0`.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_penalized(config: *mut OtmConfig, lambda: f64) -> OtmStatus {
    update(config, |c| c.model = Model::Penalized { lambda })
}

#[no_mangle]
pub unsafe extern "C" fn otm_config_set_p(config: *mut OtmConfig, p: f64) -> OtmStatus {
    update(config, |c| c.p = p)
}

/// Sets both step sizes; `sigma * tau` must be below 1.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_steps(config: *mut OtmConfig, sigma: f64, tau: f64) -> OtmStatus {
    update(config, |c| {
        c.sigma = sigma;
        c.tau = tau;
    })
}

#[no_mangle]
pub unsafe extern "C" fn otm_config_set_theta(config: *mut OtmConfig, theta: f64) -> OtmStatus {
    update(config, |c| c.theta = theta)
}

#[no_mangle]
pub unsafe extern "C" fn otm_config_set_iterations(config: *mut OtmConfig, iterations: usize) -> OtmStatus {
    update(config, |c| c.iterations = iterations)
}

/// Stops once the dual residual falls below `tolerance`; a value ≤ 0
/// disables early stopping.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_tolerance(config: *mut OtmConfig, tolerance: f64) -> OtmStatus {
    update(config, |c| c.tolerance = (tolerance > 0.0).then_some(tolerance))
}

/// Anisotropic TV weight; 0 disables the term.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_tv(config: *mut OtmConfig, gamma: f64) -> OtmStatus {
    update(config, |c| {
        c.tv_gamma = gamma;
        c.tv_kind = TvKind::Anisotropic;
    })
}

/// Clips emitted interior frames to [0, 1] when `enabled` is non-zero.
#[no_mangle]
pub unsafe extern "C" fn otm_config_set_gamut_clamp(config: *mut OtmConfig, enabled: bool) -> OtmStatus {
    update(config, |c| c.gamut_clamp = enabled)
}

/// Solves between `f0` and `f1`, each holding `len = otm_grid_cells(grid)`
/// non-negative values with the first axis fastest.
#[no_mangle]
pub unsafe extern "C" fn otm_run(
    grid: *const OtmGrid,
    config: *const OtmConfig,
    f0: *const f64,
    f1: *const f64,
    len: usize,
    out: *mut *mut OtmSolution,
) -> OtmStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let grid = &as_ref(grid, "grid")?.0;
        let cfg = &as_ref(config, "config")?.0;
        check_len("f0", grid.cells(), len)?;
        let f0 = input(f0, len, "f0")?;
        let f1 = input(f1, len, "f1")?;
        let sol = engine::run(f0, f1, grid, cfg)?;
        *out = Box::into_raw(Box::new(OtmSolution(sol)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn otm_solution_free(solution: *mut OtmSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of frames, `time_steps + 1`.
#[no_mangle]
pub unsafe extern "C" fn otm_solution_frame_count(solution: *const OtmSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.frames.len())
}

/// Copies frame `k` into `out`, which must hold exactly `len` values.
#[no_mangle]
pub unsafe extern "C" fn otm_solution_frame(
    solution: *const OtmSolution,
    k: usize,
    out: *mut f64,
    len: usize,
) -> OtmStatus {
    guard(|| {
        let sol = &as_ref(solution, "solution")?.0;
        let frame = sol.frames.get(k).ok_or_else(|| {
            Failure(
                OtmStatus::OutOfRange,
                format!("frame {k} requested, solution has {}", sol.frames.len()),
            )
        })?;
        check_len("frame buffer", frame.len(), len)?;
        output(out, len, "out")?.copy_from_slice(frame);
        Ok(())
    })
}

/// Number of iterations performed.
#[no_mangle]
pub unsafe extern "C" fn otm_solution_iterations(solution: *const OtmSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.report.iterations)
}

/// Final energy, continuity residual and dual residual; any output pointer
/// may be null. The energy is +inf if an interpolated density is negative.
#[no_mangle]
pub unsafe extern "C" fn otm_solution_stats(
    solution: *const OtmSolution,
    energy: *mut f64,
    residual: *mut f64,
    dual_residual: *mut f64,
) -> OtmStatus {
    guard(|| {
        let r = &as_ref(solution, "solution")?.0.report;
        let none = || Failure(OtmStatus::OutOfRange, "solution has no iterations".into());
        let values = [
            (energy, r.final_energy()),
            (residual, r.final_residual()),
            (dual_residual, r.final_dual_residual()),
        ];
        for (dst, v) in values {
            if let Some(dst) = dst.as_mut() {
                *dst = v.ok_or_else(none)?;
            }
        }
        Ok(())
    })
}

/// Copies the per-iteration energy trace into `out`, which must hold exactly
/// `otm_solution_iterations` values.
#[no_mangle]
pub unsafe extern "C" fn otm_solution_energy_trace(solution: *const OtmSolution, out: *mut f64, len: usize) -> OtmStatus {
    guard(|| {
        let trace = &as_ref(solution, "solution")?.0.report.energy_trace;
        check_len("trace buffer", trace.len(), len)?;
        output(out, len, "out")?.copy_from_slice(trace);
        Ok(())
    })
}

/// Proximal map of `J_p / sigma` at `(x, y)` with `x` of length `d`. Writes
/// the result to `x_out` (length `d`) and `y_out`; `steps`, if non-null,
/// receives the number of Newton steps.
#[no_mangle]
pub unsafe extern "C" fn otm_prox_jp(
    x: *const f64,
    d: usize,
    y: f64,
    p: f64,
    sigma: f64,
    x_out: *mut f64,
    y_out: *mut f64,
    steps: *mut usize,
) -> OtmStatus {
    guard(|| {
        let params = ProxParams::new(p, sigma)?;
        let x = input(x, d, "x")?;
        if !(y.is_finite() && x.iter().all(|v| v.is_finite())) {
            return Err(Failure(OtmStatus::NonFinite, "prox input is not finite".into()));
        }
        let x_out = output(x_out, d, "x_out")?;
        let y_out = as_mut(y_out, "y_out")?;
        x_out.copy_from_slice(x);
        let mut yv = y;
        let n = prox_jp_in_place(x_out, &mut yv, &params);
        *y_out = yv;
        if let Some(s) = steps.as_mut() {
            *s = n;
        }
        Ok(())
    })
}
