//! C interface to `blink_tweezer`.
//!
//! Every fallible function returns a [`BtStatus`] and writes results
//! through out-pointers. On failure the message is kept per thread and can
//! be read with [`bt_last_error_message`]. Objects crossing the boundary are
//! opaque handles released with their matching `_free` function; strings
//! returned by the library are released with [`bt_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blink_tweezer::analytic::{max_atoms, omega_from_trap, worst_survival, AnalyticTrap, AtomSpec};
use blink_tweezer::config::McConfig;
use blink_tweezer::dynamics::{sweep_heatmap, BlinkTiming};
use blink_tweezer::phasespace::{cycle_map, rotation_map, shear_map, spectral_norm, SymplecticMap};
use blink_tweezer::rearrange::{
    builtin_scenario, compile_scenario, validate_schedule, Schedule, ScenarioFile, ScheduleLimits,
};
use blink_tweezer::resonance::{
    admissible_band, is_periodic, resonant_ton_np1, resonant_ton_np2, ResonanceQuery,
};
use blink_tweezer::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    InvalidArgument = 1,
    Singular = 2,
    Capacity = 3,
    Speed = 4,
    Constraint = 5,
    Range = 6,
    Config = 7,
    Numeric = 8,
    Io = 9,
    NullPointer = 10,
    Utf8 = 11,
    Panic = 12,
}

impl From<&Error> for BtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Self::InvalidArgument,
            Error::Singular(_) => Self::Singular,
            Error::Capacity { .. } => Self::Capacity,
            Error::Speed { .. } => Self::Speed,
            Error::Constraint(_) => Self::Constraint,
            Error::Range(_) => Self::Range,
            Error::Config(_) | Error::Json(_) => Self::Config,
            Error::Numeric(_) => Self::Numeric,
            Error::Io(_) | Error::Csv(_) => Self::Io,
        }
    }
}

/// A 2x2 phase-space map `[[a, b], [c, d]]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BtMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl From<SymplecticMap> for BtMap {
    fn from(m: SymplecticMap) -> Self {
        let [a, b, c, d] = m.elements();
        Self { a, b, c, d }
    }
}

/// A band of on-times in seconds. `empty` is nonzero when no admissible
/// on-time exists.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BtBand {
    pub t_on_min: f64,
    pub t_on_max: f64,
    pub empty: bool,
}

/// Heatmap simulation settings, created from a JSON config.
pub struct BtSimConfig {
    config: McConfig,
}

/// A compiled rearrangement schedule.
pub struct BtSchedule {
    schedule: Schedule,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Utf8(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BtStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            BtStatus::from(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} must not be null"));
            BtStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(name))) => {
            set_error(format!("{name} is not valid UTF-8"));
            BtStatus::Utf8
        }
        Err(_) => {
            set_error("internal panic".into());
            BtStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn input<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(name))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bt_resonant_ton_np1(omega: f64, t_off: f64, k: u32, t_on: *mut f64) -> BtStatus {
    guard(|| {
        *out(t_on, "t_on")? = resonant_ton_np1(omega, t_off, k)?;
        Ok(())
    })
}

/// Both two-cycle resonances. Fails with `SINGULAR` at `omega * t_off = 1`.
#[no_mangle]
pub unsafe extern "C" fn bt_resonant_ton_np2(omega: f64, t_off: f64, t_on_a: *mut f64, t_on_b: *mut f64) -> BtStatus {
    guard(|| {
        let (a, b) = resonant_ton_np2(omega, t_off)?;
        *out(t_on_a, "t_on_a")? = a;
        *out(t_on_b, "t_on_b")? = b;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_admissible_band(omega: f64, t_off: f64, k: u32, n_p: u32, band: *mut BtBand) -> BtStatus {
    guard(|| {
        let q = ResonanceQuery::new(omega, t_off, k, n_p)?;
        *out(band, "band")? = match admissible_band(&q)? {
            Some(b) => BtBand {
                t_on_min: b.t_on_min,
                t_on_max: b.t_on_max,
                empty: false,
            },
            None => BtBand {
                t_on_min: 0.0,
                t_on_max: 0.0,
                empty: true,
            },
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_is_periodic(
    omega: f64,
    t_on: f64,
    t_off: f64,
    n_p: u32,
    tol: f64,
    periodic: *mut bool,
    residual: *mut f64,
) -> BtStatus {
    guard(|| {
        let p = is_periodic(omega, t_on, t_off, n_p, tol)?;
        *out(periodic, "periodic")? = p.periodic;
        if !residual.is_null() {
            *residual = p.residual;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_max_atoms(t_on: f64, t_off: f64, m: *mut u32) -> BtStatus {
    guard(|| {
        *out(m, "m")? = max_atoms(t_on, t_off)?;
        Ok(())
    })
}

/// Worst-case survival for a harmonic trap of frequency `omega` (rad/s) and
/// cutoff `d` (m), Rb-87 at `temperature` (K).
#[no_mangle]
pub unsafe extern "C" fn bt_worst_survival(
    omega: f64,
    d: f64,
    temperature: f64,
    alpha: f64,
    t_off: f64,
    n_p: u32,
    p: *mut f64,
) -> BtStatus {
    guard(|| {
        let trap = AnalyticTrap::new(omega, d)?.with_alpha(alpha)?;
        *out(p, "p")? = worst_survival(&trap, &AtomSpec::rb87(temperature)?, t_off, n_p)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_omega_from_trap(depth_u0: f64, d: f64, mass: f64, omega: *mut f64) -> BtStatus {
    guard(|| {
        *out(omega, "omega")? = omega_from_trap(depth_u0, d, mass)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_rotation_map(theta: f64, map: *mut BtMap) -> BtStatus {
    guard(|| {
        *out(map, "map")? = rotation_map(theta)?.into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_shear_map(s: f64, map: *mut BtMap) -> BtStatus {
    guard(|| {
        *out(map, "map")? = shear_map(s)?.into();
        Ok(())
    })
}

/// One blinking period `T(ω t_off) R(−ω t_on)`.
#[no_mangle]
pub unsafe extern "C" fn bt_cycle_map(omega: f64, t_on: f64, t_off: f64, map: *mut BtMap) -> BtStatus {
    guard(|| {
        *out(map, "map")? = cycle_map(omega, t_on, t_off)?.into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_map_multiply(lhs: BtMap, rhs: BtMap, product: *mut BtMap) -> BtStatus {
    guard(|| {
        let l = SymplecticMap::new(lhs.a, lhs.b, lhs.c, lhs.d)?;
        let r = SymplecticMap::new(rhs.a, rhs.b, rhs.c, rhs.d)?;
        *out(product, "product")? = (l * r).into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_spectral_norm(map: BtMap, norm: *mut f64) -> BtStatus {
    guard(|| {
        let m = SymplecticMap::new(map.a, map.b, map.c, map.d)?;
        *out(norm, "norm")? = spectral_norm(&m);
        Ok(())
    })
}

/// Parses a heatmap config (the `mc` JSON format).
#[no_mangle]
pub unsafe extern "C" fn bt_sim_config_from_json(json: *const c_char, handle: *mut *mut BtSimConfig) -> BtStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let config = McConfig::from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(BtSimConfig { config }));
        Ok(())
    })
}

/// Number of grid cells the config describes.
#[no_mangle]
pub unsafe extern "C" fn bt_sim_cell_count(handle: *const BtSimConfig, count: *mut usize) -> BtStatus {
    guard(|| {
        let c = &input(handle, "handle")?.config;
        *out(count, "count")? = c.t_on_values().len() * c.t_off_values().len();
        Ok(())
    })
}

/// Runs the heatmap and writes `len` survival values and standard errors,
/// row-major with `t_on` as the row. `len` must equal the cell count.
#[no_mangle]
pub unsafe extern "C" fn bt_sim_run(handle: *const BtSimConfig, p: *mut f64, stderr: *mut f64, len: usize) -> BtStatus {
    guard(|| {
        let c = &input(handle, "handle")?.config;
        if p.is_null() {
            return Err(Failure::Null("p"));
        }
        let heat = sweep_heatmap(&c.base_sim()?, &c.t_on_values(), &c.t_off_values())?;
        if heat.cells.len() != len {
            return Err(Error::InvalidArgument(format!("buffer holds {len} cells, grid has {}", heat.cells.len())).into());
        }
        let ps = std::slice::from_raw_parts_mut(p, len);
        for (dst, cell) in ps.iter_mut().zip(&heat.cells) {
            *dst = cell.p;
        }
        if !stderr.is_null() {
            let es = std::slice::from_raw_parts_mut(stderr, len);
            for (dst, cell) in es.iter_mut().zip(&heat.cells) {
                *dst = cell.stderr;
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_sim_config_free(handle: *mut BtSimConfig) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// JSON (micrometre units) for a built-in scenario: `rotation`, `vacancy`,
/// `worm` or `fall`, on a lattice of pitch `lattice_constant` (m). Free the result with [`bt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bt_builtin_scenario_json(name: *const c_char, lattice_constant: f64, json: *mut *mut c_char) -> BtStatus {
    guard(|| {
        let slot = out(json, "json")?;
        let s = builtin_scenario(text(name, "name")?, lattice_constant)?;
        let body = serde_json::to_string(&ScenarioFile::from_scenario(&s, Some(lattice_constant))).map_err(Error::from)?;
        *slot = to_c_string(body);
        Ok(())
    })
}

/// Compiles a scenario (micrometre JSON) into a schedule. `n_slots` of 0
/// or 1 picks as many slots as the timing allows.
#[no_mangle]
pub unsafe extern "C" fn bt_schedule_compile(
    scenario_json: *const c_char,
    t_on: f64,
    t_off: f64,
    n_blink: u32,
    n_slots: u32,
    v_max: f64,
    handle: *mut *mut BtSchedule,
) -> BtStatus {
    guard(|| {
        let slot = out(handle, "handle")?;
        let file: ScenarioFile = serde_json::from_str(text(scenario_json, "scenario_json")?)
            .map_err(|e| Error::Config(e.to_string()))?;
        let scenario = file.into_scenario()?;
        let timing = BlinkTiming::new(t_on, t_off, n_blink, n_slots.max(1))?;
        let schedule = compile_scenario(&scenario, &timing, v_max)?;
        *slot = Box::into_raw(Box::new(BtSchedule { schedule }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_schedule_cycle_count(handle: *const BtSchedule, count: *mut u32) -> BtStatus {
    guard(|| {
        *out(count, "count")? = input(handle, "handle")?.schedule.cycles.len() as u32;
        Ok(())
    })
}

/// Counts constraint violations (none means feasible). Lengths in m,
/// speeds in m/s, times in s.
#[no_mangle]
pub unsafe extern "C" fn bt_schedule_validate(
    handle: *const BtSchedule,
    v_max: f64,
    min_site_separation: f64,
    rise_time: f64,
    violations: *mut usize,
) -> BtStatus {
    guard(|| {
        let s = &input(handle, "handle")?.schedule;
        let timing = BlinkTiming {
            t_on: s.t_on,
            t_off: s.t_off,
            n_blink: s.cycles.len() as u32,
            n_slots: s.n_slots,
        };
        let limits = ScheduleLimits {
            v_max,
            min_site_separation,
            rise_time,
        };
        *out(violations, "violations")? = validate_schedule(s, &timing, &limits)?.len();
        Ok(())
    })
}

/// Schedule as JSON (SI units). Free the result with [`bt_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bt_schedule_to_json(handle: *const BtSchedule, json: *mut *mut c_char) -> BtStatus {
    guard(|| {
        let slot = out(json, "json")?;
        let body = serde_json::to_string(&input(handle, "handle")?.schedule).map_err(Error::from)?;
        *slot = to_c_string(body);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bt_schedule_free(handle: *mut BtSchedule) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
