//! C ABI over the `fradic` library.
//!
//! Every fallible function returns a [`FradicStatus`]; on failure the message
//! is kept per thread and can be read with [`fradic_last_error`]. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use fradic::controllability::{build_gramian, strategic_test};
use fradic::dynamics::{FractionalSystem, InitialKind};
use fradic::error::Error;
use fradic::hum::{solve, HumProblem, HumSolution, Target};
use fradic::mlf::ml;
use fradic::spectral::{Actuator, Interval, Region, SpectralBasis};
use nalgebra::DVector;

/// Result codes. The numeric values of `Ok`, `Error` and `NonIntegrable`
/// match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FradicStatus {
    Ok = 0,
    Error = 1,
    NonIntegrable = 3,
    InvalidArgument = 4,
    Singular = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FradicActuatorKind {
    Zone = 0,
    Pointwise = 1,
}

/// Actuator description. `a1`, `a2` are used by zones, `sigma` by pointwise actuators.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FradicActuator {
    pub kind: FradicActuatorKind,
    pub a1: f64,
    pub a2: f64,
    pub sigma: f64,
    pub gain: f64,
}

/// Opaque controlled system.
pub struct FradicSystem(FractionalSystem);

/// Opaque subregion.
pub struct FradicRegion(Region);

/// Opaque HUM solution.
pub struct FradicHumSolution(HumSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FradicStatus {
    match err {
        Error::NonIntegrable { .. } => FradicStatus::NonIntegrable,
        Error::Domain(_) | Error::InvalidParameter(_) | Error::Config(_) => FradicStatus::InvalidArgument,
        Error::Singular(_) => FradicStatus::Singular,
        Error::Io(_) => FradicStatus::Error,
    }
}

/// Runs `f`, recording its error message and trapping panics.
fn guard<F: FnOnce() -> Result<(), (FradicStatus, String)>>(f: F) -> FradicStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FradicStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FradicStatus::Panic
        }
    }
}

fn lib<T>(r: fradic::error::Result<T>) -> Result<T, (FradicStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (FradicStatus, String) {
    (FradicStatus::NullPointer, format!("{name} is null"))
}

unsafe fn read_slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], (FradicStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn write_out<T>(p: *mut T, value: T, name: &str) -> Result<(), (FradicStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(value);
    Ok(())
}

fn actuators(specs: &[FradicActuator]) -> Vec<Actuator> {
    specs
        .iter()
        .map(|a| {
            let act = match a.kind {
                FradicActuatorKind::Zone => Actuator::zone(a.a1, a.a2),
                FradicActuatorKind::Pointwise => Actuator::pointwise(a.sigma),
            };
            act.with_gain(a.gain)
        })
        .collect()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 when there is none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn fradic_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fradic_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `E_{α,β}(z)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fradic_mittag_leffler(alpha: f64, beta: f64, z: f64, out: *mut f64) -> FradicStatus {
    guard(|| write_out(out, lib(ml(alpha, beta, z))?, "out"))
}

/// Creates a system on `[0, 1]` with `n_modes` Dirichlet modes and zero initial state.
///
/// # Safety
/// `acts` must point to `n_acts` actuators; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fradic_system_new(
    alpha: f64,
    horizon: f64,
    n_modes: usize,
    acts: *const FradicActuator,
    n_acts: usize,
    out: *mut *mut FradicSystem,
) -> FradicStatus {
    guard(|| {
        let specs = read_slice(acts, n_acts, "acts")?;
        let basis = lib(SpectralBasis::dirichlet_laplacian(n_modes, Interval::unit()))?;
        let sys = lib(FractionalSystem::new(alpha, horizon, basis, actuators(specs)))?;
        write_out(out, Box::into_raw(Box::new(FradicSystem(sys))), "out")
    })
}

/// Sets the initial state's modal coefficients. `weighted_rl != 0` selects the
/// weighted Riemann–Liouville initial condition, otherwise the classical limit.
///
/// # Safety
/// `sys` must come from [`fradic_system_new`]; `z0` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn fradic_system_set_initial(
    sys: *mut FradicSystem,
    z0: *const f64,
    n: usize,
    weighted_rl: c_int,
) -> FradicStatus {
    guard(|| {
        let sys = sys.as_mut().ok_or_else(|| null("sys"))?;
        let z0 = DVector::from_column_slice(read_slice(z0, n, "z0")?);
        let kind = if weighted_rl != 0 { InitialKind::WeightedRl } else { InitialKind::ClassicalLimit };
        sys.0 = lib(sys.0.clone().with_initial(z0, kind))?;
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`fradic_system_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fradic_system_free(sys: *mut FradicSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fradic_region_new(lo: f64, hi: f64, out: *mut *mut FradicRegion) -> FradicStatus {
    guard(|| {
        let region = lib(Region::new(lo, hi))?;
        write_out(out, Box::into_raw(Box::new(FradicRegion(region))), "out")
    })
}

/// # Safety
/// `region` must come from [`fradic_region_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fradic_region_free(region: *mut FradicRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// Rank test on the first `levels` Dirichlet modes of `[0, 1]`. Writes
/// `strategic` (0/1) and up to `cap` failed levels (1-based); `n_failed`
/// receives the total number of failures.
///
/// # Safety
/// Pointers must be valid; `failed` must hold `cap` entries or be null when `cap = 0`.
#[no_mangle]
pub unsafe extern "C" fn fradic_strategic_test(
    acts: *const FradicActuator,
    n_acts: usize,
    levels: usize,
    strategic: *mut c_int,
    failed: *mut usize,
    cap: usize,
    n_failed: *mut usize,
) -> FradicStatus {
    guard(|| {
        let specs = read_slice(acts, n_acts, "acts")?;
        let basis = lib(SpectralBasis::dirichlet_laplacian(levels, Interval::unit()))?;
        let rep = lib(strategic_test(&actuators(specs), &basis, levels))?;
        let levels = rep.failed_levels();
        write_out(strategic, c_int::from(rep.strategic), "strategic")?;
        write_out(n_failed, levels.len(), "n_failed")?;
        if cap > 0 {
            if failed.is_null() {
                return Err(null("failed"));
            }
            for (k, &j) in levels.iter().take(cap).enumerate() {
                *failed.add(k) = j;
            }
        }
        Ok(())
    })
}

/// Regional Gramian summary. `n_omega = 0` selects the default region dimension.
///
/// # Safety
/// Handles must be live; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fradic_gramian(
    sys: *const FradicSystem,
    region: *const FradicRegion,
    n_omega: usize,
    smallest_eigenvalue: *mut f64,
    positive_definite: *mut c_int,
    n_omega_used: *mut usize,
) -> FradicStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let region = region.as_ref().ok_or_else(|| null("region"))?;
        let gram = lib(build_gramian(&sys.0, &region.0, (n_omega > 0).then_some(n_omega)))?;
        write_out(smallest_eigenvalue, gram.smallest_eigenvalue, "smallest_eigenvalue")?;
        write_out(positive_definite, c_int::from(gram.positive_definite), "positive_definite")?;
        write_out(n_omega_used, gram.n_omega, "n_omega_used")
    })
}

/// HUM solve toward the modal target `target[0..n]` (restricted to the region).
/// `epsilon < 0` selects the default regularisation; `n_omega = 0` the default dimension.
///
/// # Safety
/// Handles must be live; `target` must hold `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fradic_hum_solve(
    sys: *const FradicSystem,
    region: *const FradicRegion,
    target: *const f64,
    n: usize,
    epsilon: f64,
    n_omega: usize,
    out: *mut *mut FradicHumSolution,
) -> FradicStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let region = region.as_ref().ok_or_else(|| null("region"))?;
        let z = DVector::from_column_slice(read_slice(target, n, "target")?);
        if z.len() != sys.0.n_modes() {
            return Err((
                FradicStatus::InvalidArgument,
                format!("target has {} coefficients, system has {} modes", z.len(), sys.0.n_modes()),
            ));
        }
        let mut prob = HumProblem::new(sys.0.clone(), region.0.clone(), Target::Modal(z));
        if epsilon >= 0.0 {
            prob = prob.with_epsilon(epsilon);
        }
        if n_omega > 0 {
            prob = prob.with_omega_modes(n_omega);
        }
        let sol = lib(solve(&prob))?;
        write_out(out, Box::into_raw(Box::new(FradicHumSolution(sol))), "out")
    })
}

/// Energy, residual, relative residual and convergence flag of a solution.
///
/// # Safety
/// `sol` must be live; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fradic_hum_summary(
    sol: *const FradicHumSolution,
    energy: *mut f64,
    residual: *mut f64,
    relative_residual: *mut f64,
    converged: *mut c_int,
) -> FradicStatus {
    guard(|| {
        let sol = &sol.as_ref().ok_or_else(|| null("sol"))?.0;
        write_out(energy, sol.energy(), "energy")?;
        write_out(residual, sol.residual(), "residual")?;
        write_out(relative_residual, sol.relative_residual(), "relative_residual")?;
        write_out(converged, c_int::from(sol.converged), "converged")
    })
}

/// Control samples: `times[cap]` and row-major `values[cap × channels]`.
/// `n_samples` and `n_channels` are always written; `BufferTooSmall` is
/// returned when `cap` is smaller than the sample count.
///
/// # Safety
/// `sol` must be live; buffers must hold the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn fradic_hum_control(
    sol: *const FradicHumSolution,
    times: *mut f64,
    values: *mut f64,
    cap: usize,
    n_samples: *mut usize,
    n_channels: *mut usize,
) -> FradicStatus {
    guard(|| {
        let sol = &sol.as_ref().ok_or_else(|| null("sol"))?.0;
        let (m, p) = sol.samples.shape();
        write_out(n_samples, m, "n_samples")?;
        write_out(n_channels, p, "n_channels")?;
        if cap < m {
            return Err((FradicStatus::BufferTooSmall, format!("need room for {m} samples, got {cap}")));
        }
        if times.is_null() || values.is_null() {
            return Err(null("times/values"));
        }
        for k in 0..m {
            *times.add(k) = sol.sample_times[k];
            for c in 0..p {
                *values.add(k * p + c) = sol.samples[(k, c)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `sol` must come from [`fradic_hum_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fradic_hum_free(sol: *mut FradicHumSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
