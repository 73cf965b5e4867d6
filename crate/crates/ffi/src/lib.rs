//! C ABI over `constraint-ensembles`.
//!
//! Conventions:
//! * every fallible call returns a [`CensStatus`]; on failure the message is
//!   available from [`cens_last_error_message`] on the same thread;
//! * handles are opaque, created by `*_new`/`*_from_*` and released by `*_free`;
//! * arrays are caller-allocated `double` buffers with explicit lengths;
//! * strings returned to the caller are freed with [`cens_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use constraint_ensembles::classical::{gauge_fix_hamilton, maupertuis_shoot};
use constraint_ensembles::ensembles::{
    canonical_from_kernel, full_report, laplace_consistency, microcanonical_from_kernel,
    ClockSetting, EnergyGridSetting, RegularizationSetting,
};
use constraint_ensembles::linalg::{eig_hermitian, CMatrix, HermitianOperator, C64};
use constraint_ensembles::models::{build_quantum, ClassicalModelSpec, ClassicalSystem, QuantumModelSpec};
use constraint_ensembles::projector::DeltaRegularization;
use constraint_ensembles::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    BufferTooSmall = 4,
    InvalidArgument = 5,
    NonHermitianInput = 6,
    ConvergenceFailure = 7,
    DimensionOverflow = 8,
    DimensionMismatch = 9,
    InvalidSpec = 10,
    InvalidGrid = 11,
    AliasingError = 12,
    InvalidRegularization = 13,
    QuadratureUnderresolved = 14,
    GridTooCoarse = 15,
    EnergyOffClockLattice = 16,
    EmptyGrid = 17,
    ConstraintViolated = 18,
    StepSizeTooLarge = 19,
    NonMonotoneTime = 20,
    ShootingDiverged = 21,
    EnergyBelowBarrier = 22,
    Panic = 99,
}

impl From<&Error> for CensStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NonHermitianInput { .. } => CensStatus::NonHermitianInput,
            Error::ConvergenceFailure { .. } => CensStatus::ConvergenceFailure,
            Error::DimensionOverflow { .. } => CensStatus::DimensionOverflow,
            Error::DimensionMismatch { .. } => CensStatus::DimensionMismatch,
            Error::InvalidArgument(_) => CensStatus::InvalidArgument,
            Error::InvalidSpec(_) => CensStatus::InvalidSpec,
            Error::InvalidGrid(_) => CensStatus::InvalidGrid,
            Error::AliasingError { .. } => CensStatus::AliasingError,
            Error::InvalidRegularization(_) => CensStatus::InvalidRegularization,
            Error::QuadratureUnderresolved { .. } => CensStatus::QuadratureUnderresolved,
            Error::GridTooCoarse(_) => CensStatus::GridTooCoarse,
            Error::EnergyOffClockLattice { .. } => CensStatus::EnergyOffClockLattice,
            Error::EmptyGrid(_) => CensStatus::EmptyGrid,
            Error::ConstraintViolated { .. } => CensStatus::ConstraintViolated,
            Error::StepSizeTooLarge { .. } => CensStatus::StepSizeTooLarge,
            Error::NonMonotoneTime => CensStatus::NonMonotoneTime,
            Error::ShootingDiverged { .. } => CensStatus::ShootingDiverged,
            Error::EnergyBelowBarrier { .. } => CensStatus::EnergyBelowBarrier,
        }
    }
}

/// Opaque Hermitian system Hamiltonian.
pub struct CensHamiltonian {
    inner: HermitianOperator,
}

/// Opaque classical system `H = |p|^2 / 2m + V(q)`.
pub struct CensClassicalSystem {
    inner: ClassicalSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("interior NULs removed"));
}

struct Failure(CensStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CensStatus::from(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> CensStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CensStatus::Ok
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CensStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CensStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(CensStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_slice(p: *mut f64, len: usize, values: &[f64], what: &str) -> Result<(), Failure> {
    if values.len() > len {
        return Err(Failure(
            CensStatus::BufferTooSmall,
            format!("{what} needs {} entries, buffer holds {len}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if p.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), p, values.len());
    Ok(())
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(CensStatus::InvalidJson, e.to_string()))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cens_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cens_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cens_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a Hamiltonian from a quantum model JSON object, e.g.
/// `{"kind": "two_level", "e0": 0, "e1": 1}`.
///
/// # Safety
/// `model_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_hamiltonian_from_model_json(
    model_json: *const c_char,
    out: *mut *mut CensHamiltonian,
) -> CensStatus {
    guard(|| {
        let text = read_str(model_json, "model_json")?;
        let spec: QuantumModelSpec = parse_json(text)?;
        let h = build_quantum(&spec)?;
        write_out(out, Box::into_raw(Box::new(CensHamiltonian { inner: h })), "out")
    })
}

/// Builds a Hamiltonian from row-major real and imaginary parts (`n * n` each;
/// `im` may be NULL for a real matrix).
///
/// # Safety
/// `re` (and `im` when non-NULL) must hold `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_hamiltonian_from_matrix(
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut *mut CensHamiltonian,
) -> CensStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure(CensStatus::InvalidArgument, "n must be >= 1".into()));
        }
        let re = read_slice(re, n * n, "re")?;
        let im = if im.is_null() { None } else { Some(read_slice(im, n * n, "im")?) };
        let data: Vec<C64> = (0..n * n)
            .map(|i| C64::new(re[i], im.map_or(0.0, |v| v[i])))
            .collect();
        let m = CMatrix::from_shape_vec((n, n), data)
            .map_err(|e| Failure(CensStatus::InvalidArgument, e.to_string()))?;
        let h = HermitianOperator::new(m)?;
        write_out(out, Box::into_raw(Box::new(CensHamiltonian { inner: h })), "out")
    })
}

/// Releases a Hamiltonian. NULL is ignored.
///
/// # Safety
/// `h` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cens_hamiltonian_free(h: *mut CensHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Dimension of the Hilbert space, 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cens_hamiltonian_dim(h: *const CensHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.inner.dim())
}

/// Writes the ascending eigenvalues into `out` (capacity `len`).
///
/// # Safety
/// `h` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cens_hamiltonian_eigenvalues(
    h: *const CensHamiltonian,
    out: *mut f64,
    len: usize,
) -> CensStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("h"))?;
        let eig = eig_hermitian(&h.inner)?;
        write_slice(out, len, &eig.eigenvalues, "out")
    })
}

/// `Tr exp(-beta H)`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_canonical_from_kernel(
    h: *const CensHamiltonian,
    beta: f64,
    out: *mut f64,
) -> CensStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("h"))?;
        let z = canonical_from_kernel(&h.inner, beta)?;
        write_out(out, z, "out")
    })
}

/// `Tr g_width(H - energy)`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_microcanonical_from_kernel(
    h: *const CensHamiltonian,
    energy: f64,
    width: f64,
    out: *mut f64,
) -> CensStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("h"))?;
        let w = microcanonical_from_kernel(&h.inner, energy, &DeltaRegularization::gaussian(width))?;
        write_out(out, w, "out")
    })
}

/// Trapezoid `int dE Omega(E) exp(-beta E)` on `grid`.
///
/// # Safety
/// `h` must be a live handle; `grid` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_laplace_consistency(
    h: *const CensHamiltonian,
    width: f64,
    beta: f64,
    grid: *const f64,
    len: usize,
    out: *mut f64,
) -> CensStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("h"))?;
        let grid = read_slice(grid, len, "grid")?;
        let v = laplace_consistency(&h.inner, &DeltaRegularization::gaussian(width), beta, grid)?;
        write_out(out, v, "out")
    })
}

/// Full two-route report (auto clock, default grids) as a JSON string; free
/// it with [`cens_string_free`].
///
/// # Safety
/// `model_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_compare_report_json(
    model_json: *const c_char,
    out_json: *mut *mut c_char,
) -> CensStatus {
    guard(|| {
        let text = read_str(model_json, "model_json")?;
        let spec: QuantumModelSpec = parse_json(text)?;
        let report = full_report(
            &spec,
            &ClockSetting::default(),
            &RegularizationSetting::default(),
            &constraint_ensembles::ensembles::default_beta_grid(),
            &EnergyGridSetting::default(),
        )?;
        let s = serde_json::to_string(&report).map_err(|e| Failure(CensStatus::InvalidJson, e.to_string()))?;
        let c = CString::new(s).map_err(|e| Failure(CensStatus::InvalidJson, e.to_string()))?;
        write_out(out_json, c.into_raw(), "out_json")
    })
}

/// Builds a classical system from JSON, e.g. `{"kind": "harmonic", "omega": 1}`.
///
/// # Safety
/// `system_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_classical_system_from_json(
    system_json: *const c_char,
    out: *mut *mut CensClassicalSystem,
) -> CensStatus {
    guard(|| {
        let text = read_str(system_json, "system_json")?;
        let spec: ClassicalModelSpec = parse_json(text)?;
        let sys = ClassicalSystem::from_spec(&spec)?;
        write_out(out, Box::into_raw(Box::new(CensClassicalSystem { inner: sys })), "out")
    })
}

/// Releases a classical system. NULL is ignored.
///
/// # Safety
/// `sys` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cens_classical_system_free(sys: *mut CensClassicalSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Degrees of freedom, 0 for NULL.
///
/// # Safety
/// `sys` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cens_classical_system_dof(sys: *const CensClassicalSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.dof())
}

/// Fixed-time gauge integration over `[t0, t1]`; writes the final `q`, `p`
/// (`dof` entries each) and the maximum constraint drift.
///
/// # Safety
/// `sys` must be a live handle; vectors must hold `dof` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_gauge_fix_hamilton(
    sys: *const CensClassicalSystem,
    q0: *const f64,
    p0: *const f64,
    dof: usize,
    t0: f64,
    t1: f64,
    n_steps: usize,
    q_out: *mut f64,
    p_out: *mut f64,
    drift_out: *mut f64,
) -> CensStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let q0 = read_slice(q0, dof, "q0")?;
        let p0 = read_slice(p0, dof, "p0")?;
        let traj = gauge_fix_hamilton(&sys.inner, q0, p0, (t0, t1), n_steps)?;
        let last = traj.last();
        write_slice(q_out, dof, &last.q, "q_out")?;
        write_slice(p_out, dof, &last.p, "p_out")?;
        write_out(drift_out, traj.energy_drift, "drift_out")
    })
}

/// Fixed-energy shooting from `q_a` to `q_b`; writes `p_a` (`dof` entries)
/// and the time of flight.
///
/// # Safety
/// `sys` must be a live handle; vectors must hold `dof` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cens_maupertuis_shoot(
    sys: *const CensClassicalSystem,
    q_a: *const f64,
    q_b: *const f64,
    dof: usize,
    energy: f64,
    init_guess: *const f64,
    p_a_out: *mut f64,
    time_of_flight_out: *mut f64,
) -> CensStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(|| null("sys"))?;
        let q_a = read_slice(q_a, dof, "q_a")?;
        let q_b = read_slice(q_b, dof, "q_b")?;
        let guess = read_slice(init_guess, dof, "init_guess")?;
        let sol = maupertuis_shoot(&sys.inner, q_a, q_b, energy, guess)?;
        write_slice(p_a_out, dof, &sol.p_a, "p_a_out")?;
        write_out(time_of_flight_out, sol.time_of_flight, "time_of_flight_out")
    })
}
