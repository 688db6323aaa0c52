//! C ABI over `plsim`.
//!
//! Handles are opaque pointers created by `*_new` and released by `*_free`.
//! Every fallible function returns a [`PlsimStatus`]; on failure the message
//! is kept per thread and can be read with [`plsim_last_error`]. Panics are
//! caught at the boundary and reported as `PLSIM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use plsim::bounds::{resolvent_bound, BoundConfig};
use plsim::discretization::{assemble_generator_capped, assemble_time_domain, build_grid, GeneratorMatrix, DEFAULT_MAX_DENSE_NODES};
use plsim::model::{DampingConfig, FieldState, ParamSpec, PhysicalParams, XiMode};
use plsim::spectral::{resonance_check, spectrum, HessenbergForm};
use plsim::timeintegrator::{simulate, Bootstrap, IntegratorConfig, IntegratorError, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Divergence = 3,
    NoConvergence = 4,
    BufferTooSmall = 5,
    NotRun = 6,
    Panic = 7,
}

/// Material constants; `xi` is taken as given.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlsimParams {
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps3: f64,
    pub mu: f64,
    pub xi: f64,
    pub length: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlsimDamping {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PlsimEnergy {
    pub kinetic: f64,
    pub potential: f64,
    pub magnetic: f64,
    pub electrical: f64,
    pub total: f64,
}

/// First-step method of BDF2.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlsimBootstrap {
    BackwardEuler = 0,
    Trapezoidal = 1,
}

/// A configured time-domain run and, after `plsim_simulation_run`, its result.
pub struct PlsimSimulation {
    system: plsim::discretization::SemiDiscreteSystem,
    initial: FieldState,
    config: IntegratorConfig,
    result: Option<Trajectory<FieldState>>,
}

/// The discrete generator of one damping case.
pub struct PlsimGenerator {
    generator: GeneratorMatrix,
    form: OnceLock<HessenbergForm>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

fn fail(status: PlsimStatus, msg: impl Into<String>) -> PlsimStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `Panic`.
fn guard(f: impl FnOnce() -> PlsimStatus) -> PlsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PlsimStatus::Panic, msg)
        }
    }
}

unsafe fn params_from(p: *const PlsimParams) -> Result<PhysicalParams, PlsimStatus> {
    let p = p.as_ref().ok_or_else(|| fail(PlsimStatus::NullPointer, "params is null"))?;
    let spec = ParamSpec {
        rho: p.rho,
        alpha: p.alpha,
        gamma: p.gamma,
        eps3: p.eps3,
        mu: p.mu,
        xi: p.xi,
        length: p.length,
        xi_mode: XiMode::Explicit,
        ..ParamSpec::unit()
    };
    spec.build().map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string()))
}

unsafe fn damping_from(d: *const PlsimDamping) -> Result<DampingConfig, PlsimStatus> {
    let d = d.as_ref().ok_or_else(|| fail(PlsimStatus::NullPointer, "damping is null"))?;
    DampingConfig::new(d.a, d.b, d.c).map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string()))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Copies `src` into `out[..cap]`; `written` receives `src.len()` either way.
unsafe fn copy_out(src: &[f64], out: *mut f64, cap: usize, written: *mut usize) -> PlsimStatus {
    if let Some(w) = written.as_mut() {
        *w = src.len();
    }
    if out.is_null() {
        return if cap == 0 { PlsimStatus::Ok } else { fail(PlsimStatus::NullPointer, "output buffer is null") };
    }
    if cap < src.len() {
        return fail(PlsimStatus::BufferTooSmall, format!("need {} entries, buffer holds {cap}", src.len()));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    PlsimStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn plsim_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// Message of the last failure on this thread; valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn plsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// All constants equal to one.
#[no_mangle]
pub extern "C" fn plsim_params_unit() -> PlsimParams {
    PlsimParams { rho: 1.0, alpha: 1.0, gamma: 1.0, eps3: 1.0, mu: 1.0, xi: 1.0, length: 1.0 }
}

/// Sets up a run on `n_cells` cells. `initial` holds the eight fields
/// `v, phi, theta, eta, v_t, phi_t, theta_t, eta_t`, each `n_cells + 1`
/// nodal values, field after field; a null pointer selects the benchmark data.
///
/// # Safety
/// Pointers must be null or valid; `initial` must hold `8 (n_cells + 1)` values.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_new(
    params: *const PlsimParams,
    damping: *const PlsimDamping,
    n_cells: usize,
    dt: f64,
    t_end: f64,
    bootstrap: PlsimBootstrap,
    initial: *const f64,
    out: *mut *mut PlsimSimulation,
) -> PlsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlsimStatus::NullPointer, "out is null");
        }
        let p = tri!(params_from(params));
        let d = tri!(damping_from(damping));
        let grid = tri!(build_grid(p.length(), n_cells).map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        let system = tri!(assemble_time_domain(&p, &d, &grid).map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        let config = IntegratorConfig {
            dt,
            t_end,
            bootstrap: match bootstrap {
                PlsimBootstrap::BackwardEuler => Bootstrap::BackwardEuler,
                PlsimBootstrap::Trapezoidal => Bootstrap::Trapezoidal,
            },
            snapshot_stride: usize::MAX,
        };
        tri!(config.steps().map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        let state = if initial.is_null() {
            FieldState::benchmark(&grid)
        } else {
            let m = grid.node_count();
            let data = std::slice::from_raw_parts(initial, 8 * m);
            let mut s = FieldState::zeros(&grid);
            for (k, arr) in s.fields_mut().into_iter().enumerate() {
                arr.copy_from_slice(&data[k * m..(k + 1) * m]);
            }
            s
        };
        let sim = PlsimSimulation { system, initial: state, config, result: None };
        *out = Box::into_raw(Box::new(sim));
        PlsimStatus::Ok
    })
}

/// Advances the configured run to `t_end`.
///
/// # Safety
/// `sim` must be null or a live handle from `plsim_simulation_new`.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_run(sim: *mut PlsimSimulation) -> PlsimStatus {
    guard(|| {
        let sim = tri!(sim.as_mut().ok_or_else(|| fail(PlsimStatus::NullPointer, "simulation is null")));
        match simulate(&sim.system, &sim.initial, &sim.config) {
            Ok(t) => {
                sim.result = Some(t);
                PlsimStatus::Ok
            }
            Err(IntegratorError::Divergence { step }) => fail(PlsimStatus::Divergence, format!("diverged at step {step}")),
            Err(e) => fail(PlsimStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `sim` must be null or live for `'a`.
unsafe fn trajectory<'a>(sim: *const PlsimSimulation) -> Result<&'a Trajectory<FieldState>, PlsimStatus> {
    let sim = sim.as_ref().ok_or_else(|| fail(PlsimStatus::NullPointer, "simulation is null"))?;
    sim.result.as_ref().ok_or_else(|| fail(PlsimStatus::NotRun, "simulation has not been run"))
}

/// Total energy at every step `0..=steps`; `written` receives the count.
///
/// # Safety
/// `sim` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_energy(
    sim: *const PlsimSimulation,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> PlsimStatus {
    guard(|| {
        let t = tri!(trajectory(sim));
        copy_out(&t.totals(), out, cap, written)
    })
}

/// Energy breakdown at step `index`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_energy_at(
    sim: *const PlsimSimulation,
    index: usize,
    out: *mut PlsimEnergy,
) -> PlsimStatus {
    guard(|| {
        let t = tri!(trajectory(sim));
        let Some(out) = out.as_mut() else { return fail(PlsimStatus::NullPointer, "out is null") };
        let Some(e) = t.energy_series.get(index) else {
            return fail(PlsimStatus::InvalidArgument, format!("index {index} beyond {} steps", t.energy_series.len() - 1));
        };
        *out = PlsimEnergy {
            kinetic: e.kinetic,
            potential: e.potential,
            magnetic: e.magnetic,
            electrical: e.electrical,
            total: e.total,
        };
        PlsimStatus::Ok
    })
}

/// Final state in the layout of `plsim_simulation_new`.
///
/// # Safety
/// `sim` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_final_state(
    sim: *const PlsimSimulation,
    out: *mut f64,
    cap: usize,
    written: *mut usize,
) -> PlsimStatus {
    guard(|| {
        let t = tri!(trajectory(sim));
        let flat: Vec<f64> = t.final_state().fields().iter().flat_map(|f| f.iter().copied()).collect();
        copy_out(&flat, out, cap, written)
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plsim_simulation_free(sim: *mut PlsimSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Assembles the generator; fails above the dense size cap.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_new(
    params: *const PlsimParams,
    damping: *const PlsimDamping,
    n_cells: usize,
    out: *mut *mut PlsimGenerator,
) -> PlsimStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlsimStatus::NullPointer, "out is null");
        }
        let p = tri!(params_from(params));
        let d = tri!(damping_from(damping));
        let grid = tri!(build_grid(p.length(), n_cells).map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        let generator = tri!(assemble_generator_capped(&p, &d, &grid, DEFAULT_MAX_DENSE_NODES)
            .map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        *out = Box::into_raw(Box::new(PlsimGenerator { generator, form: OnceLock::new() }));
        PlsimStatus::Ok
    })
}

/// Dimension of the compressed generator, i.e. the eigenvalue count.
///
/// # Safety
/// `gen` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_dimension(gen: *const PlsimGenerator, out: *mut usize) -> PlsimStatus {
    guard(|| {
        let (Some(g), Some(out)) = (gen.as_ref(), out.as_mut()) else {
            return fail(PlsimStatus::NullPointer, "null argument");
        };
        *out = g.generator.dimension();
        PlsimStatus::Ok
    })
}

/// Eigenvalues sorted by real part, descending.
///
/// # Safety
/// `gen` must be a live handle; `re`, `im` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_eigenvalues(
    gen: *const PlsimGenerator,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    written: *mut usize,
) -> PlsimStatus {
    guard(|| {
        let Some(g) = gen.as_ref() else { return fail(PlsimStatus::NullPointer, "generator is null") };
        let report = tri!(spectrum(&g.generator).map_err(|e| fail(PlsimStatus::NoConvergence, e.to_string())));
        let (r, i): (Vec<f64>, Vec<f64>) = report.eigenvalues.iter().map(|z| (z.re, z.im)).unzip();
        let s = copy_out(&r, re, cap, written);
        if s != PlsimStatus::Ok {
            return s;
        }
        copy_out(&i, im, cap, written)
    })
}

/// Largest real part of the spectrum.
///
/// # Safety
/// `gen` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_spectral_abscissa(gen: *const PlsimGenerator, out: *mut f64) -> PlsimStatus {
    guard(|| {
        let (Some(g), Some(out)) = (gen.as_ref(), out.as_mut()) else {
            return fail(PlsimStatus::NullPointer, "null argument");
        };
        let report = tri!(spectrum(&g.generator).map_err(|e| fail(PlsimStatus::NoConvergence, e.to_string())));
        *out = report.spectral_abscissa;
        PlsimStatus::Ok
    })
}

/// `||(i lambda I - A_h)^{-1}||` in the energy norm; `INFINITY` when the
/// shift is numerically singular.
///
/// # Safety
/// `gen` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_resolvent_norm(gen: *const PlsimGenerator, lambda: f64, out: *mut f64) -> PlsimStatus {
    guard(|| {
        let (Some(g), Some(out)) = (gen.as_ref(), out.as_mut()) else {
            return fail(PlsimStatus::NullPointer, "null argument");
        };
        if !lambda.is_finite() {
            return fail(PlsimStatus::InvalidArgument, "lambda must be finite");
        }
        let form = g.form.get_or_init(|| HessenbergForm::new(g.generator.compressed()));
        *out = form.resolvent_norm(lambda).unwrap_or(f64::INFINITY);
        PlsimStatus::Ok
    })
}

/// # Safety
/// `gen` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plsim_generator_free(gen: *mut PlsimGenerator) {
    if !gen.is_null() {
        drop(Box::from_raw(gen));
    }
}

/// Final constant of the explicit resolvent bound for the damping case;
/// `poincare <= 0` selects `2L/pi`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_resolvent_bound(
    params: *const PlsimParams,
    damping: *const PlsimDamping,
    poincare: f64,
    out: *mut f64,
) -> PlsimStatus {
    guard(|| {
        let p = tri!(params_from(params));
        let d = tri!(damping_from(damping));
        let Some(out) = out.as_mut() else { return fail(PlsimStatus::NullPointer, "out is null") };
        let cfg = BoundConfig { poincare_constant: (poincare > 0.0).then_some(poincare), k_coercivity: None };
        let report = tri!(resolvent_bound(&p, &d, &cfg).map_err(|e| fail(PlsimStatus::InvalidArgument, e.to_string())));
        *out = report.final_constant;
        PlsimStatus::Ok
    })
}

/// Smallest resonant index `n <= n_max`, or `-1`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn plsim_resonance_check(
    params: *const PlsimParams,
    n_max: u32,
    tol: f64,
    out: *mut i64,
) -> PlsimStatus {
    guard(|| {
        let p = tri!(params_from(params));
        let Some(out) = out.as_mut() else { return fail(PlsimStatus::NullPointer, "out is null") };
        if !(tol.is_finite() && tol > 0.0) {
            return fail(PlsimStatus::InvalidArgument, "tol must be > 0");
        }
        *out = resonance_check(&p, n_max, tol).map_or(-1, i64::from);
        PlsimStatus::Ok
    })
}
