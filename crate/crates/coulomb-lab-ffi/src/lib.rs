//! C ABI for the coulomb-lab numerical laboratory.
//!
//! Conventions:
//! * every fallible call returns a [`ClabStatus`]; outputs go through
//!   pointers and are written only on `CLAB_STATUS_OK`;
//! * scenarios are opaque handles created by [`clab_scenario_parse`] and
//!   released with [`clab_scenario_free`];
//! * [`clab_last_error_message`] returns a thread-local description of the
//!   most recent failure, valid until the next failing call on the thread.
//!
//! The C header is generated into `include/coulomb_lab.h` at build time.

use coulomb_lab::config::{parse_config, ScenarioConfig};
use coulomb_lab::csvout::write_ledger_rows;
use coulomb_lab::energy::Ledger;
use coulomb_lab::evolver::{evolve_visit, EvolveOptions};
use coulomb_lab::norms::{is_coulomb_allowed, Admissibility, Exponent, PairPQ};
use libc::{c_char, c_double, c_int};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ClabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    RuntimeError = 4,
    IoError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &coulomb_lab::Error) -> ClabStatus {
    use coulomb_lab::Error::*;
    set_error(&err.to_string());
    match err {
        ConfigParse { .. } => ClabStatus::ParseError,
        Io(_) => ClabStatus::IoError,
        LengthMismatch { .. } | InvalidGrid(_) | InvalidArgument(_) | ExponentRange(_)
        | InvariantViolation(_) | SupportOutsideGrid { .. } | DimensionNot3(_) => {
            ClabStatus::InvalidArgument
        }
        _ => ClabStatus::RuntimeError,
    }
}

/// Message of the most recent failure on this thread. Never null; owned by
/// the library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn clab_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Regular solution `Phi` of the reduced Laplace problem and its derivative.
///
/// # Safety
/// `out_value` and `out_derivative` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn clab_phi(
    d: u32,
    r: c_double,
    out_value: *mut c_double,
    out_derivative: *mut c_double,
) -> ClabStatus {
    if out_value.is_null() || out_derivative.is_null() {
        set_error("null output pointer");
        return ClabStatus::NullArgument;
    }
    match coulomb_lab::special::phi(r, d) {
        Ok((v, dv)) => {
            unsafe {
                *out_value = v;
                *out_derivative = dv;
            }
            ClabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Fast-decaying solution `Psi` and its derivative.
///
/// # Safety
/// `out_value` and `out_derivative` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn clab_psi(
    d: u32,
    r: c_double,
    out_value: *mut c_double,
    out_derivative: *mut c_double,
) -> ClabStatus {
    if out_value.is_null() || out_derivative.is_null() {
        set_error("null output pointer");
        return ClabStatus::NullArgument;
    }
    match coulomb_lab::special::psi(r, d) {
        Ok((v, dv)) => {
            unsafe {
                *out_value = v;
                *out_derivative = dv;
            }
            ClabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Classification of a space-time exponent pair.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ClabAdmissibility {
    NotAllowed = 0,
    Interior = 1,
    EqualityEdge = 2,
}

/// Membership of `(p, q)` in the radial Coulomb allowed region, with exact
/// rational arithmetic. A zero denominator encodes an infinite exponent.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn clab_pair_allowed(
    d: u32,
    p_num: i64,
    p_den: i64,
    q_num: i64,
    q_den: i64,
    out: *mut ClabAdmissibility,
) -> ClabStatus {
    if out.is_null() {
        set_error("null output pointer");
        return ClabStatus::NullArgument;
    }
    if d < 3 {
        set_error("dimension must be >= 3");
        return ClabStatus::InvalidArgument;
    }
    let exponent = |num: i64, den: i64| -> Option<Exponent> {
        if den == 0 {
            Some(Exponent::Infinity)
        } else if num <= 0 {
            None
        } else {
            Some(Exponent::rational(num, den))
        }
    };
    let (Some(p), Some(q)) = (exponent(p_num, p_den), exponent(q_num, q_den)) else {
        set_error("exponents must be positive rationals or infinite (den = 0)");
        return ClabStatus::InvalidArgument;
    };
    let verdict = match is_coulomb_allowed(&PairPQ { p, q, d }) {
        Admissibility::NotAllowed => ClabAdmissibility::NotAllowed,
        Admissibility::Interior => ClabAdmissibility::Interior,
        Admissibility::EqualityEdge => ClabAdmissibility::EqualityEdge,
    };
    unsafe {
        *out = verdict;
    }
    ClabStatus::Ok
}

/// Opaque scenario handle.
pub struct ClabScenario {
    text: String,
    overrides: Vec<String>,
}

impl ClabScenario {
    fn build(&self) -> Result<ScenarioConfig, coulomb_lab::Error> {
        parse_config(&self.text, &self.overrides)
    }
}

/// Parses a scenario configuration (same text format as the CLI) into an
/// opaque handle. On success the handle must be released with
/// [`clab_scenario_free`].
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn clab_scenario_parse(
    text: *const c_char,
    out: *mut *mut ClabScenario,
) -> ClabStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument");
        return ClabStatus::NullArgument;
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t.to_string(),
        Err(_) => {
            set_error("configuration text is not valid UTF-8");
            return ClabStatus::InvalidArgument;
        }
    };
    let handle = ClabScenario {
        text,
        overrides: Vec::new(),
    };
    match handle.build() {
        Ok(_) => {
            unsafe {
                *out = Box::into_raw(Box::new(handle));
            }
            ClabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Applies a `section.key=value` override; the amended configuration is
/// validated immediately.
///
/// # Safety
/// `scenario` must be a live handle from [`clab_scenario_parse`].
#[no_mangle]
pub unsafe extern "C" fn clab_scenario_set(
    scenario: *mut ClabScenario,
    key: *const c_char,
    value: *const c_char,
) -> ClabStatus {
    if scenario.is_null() || key.is_null() || value.is_null() {
        set_error("null argument");
        return ClabStatus::NullArgument;
    }
    let handle = &mut *scenario;
    let (Ok(key), Ok(value)) = (CStr::from_ptr(key).to_str(), CStr::from_ptr(value).to_str()) else {
        set_error("override is not valid UTF-8");
        return ClabStatus::InvalidArgument;
    };
    handle.overrides.push(format!("{key}={value}"));
    match handle.build() {
        Ok(_) => ClabStatus::Ok,
        Err(e) => {
            handle.overrides.pop();
            status_of(&e)
        }
    }
}

/// Conserved energy of the configured initial data.
///
/// # Safety
/// `scenario` must be a live handle from [`clab_scenario_parse`].
#[no_mangle]
pub unsafe extern "C" fn clab_scenario_initial_energy(
    scenario: *const ClabScenario,
    out_energy: *mut c_double,
) -> ClabStatus {
    if scenario.is_null() || out_energy.is_null() {
        set_error("null argument");
        return ClabStatus::NullArgument;
    }
    let handle = &*scenario;
    let result = handle.build().and_then(|cfg| {
        let state = cfg.initial_state()?;
        Ok(coulomb_lab::energy::total_energies(&state).e_total)
    });
    match result {
        Ok(e) => {
            *out_energy = e;
            ClabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Evolves the scenario and writes the energy-ledger CSV to `csv_path`.
/// Returns the number of rows written through `out_rows` when non-null.
///
/// # Safety
/// `scenario` must be a live handle from [`clab_scenario_parse`];
/// `csv_path` must be a valid NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn clab_scenario_run_evolve(
    scenario: *const ClabScenario,
    csv_path: *const c_char,
    out_rows: *mut c_int,
) -> ClabStatus {
    if scenario.is_null() || csv_path.is_null() {
        set_error("null argument");
        return ClabStatus::NullArgument;
    }
    let handle = &*scenario;
    let Ok(path) = CStr::from_ptr(csv_path).to_str() else {
        set_error("csv path is not valid UTF-8");
        return ClabStatus::InvalidArgument;
    };
    let result = handle.build().and_then(|cfg| {
        let state = cfg.initial_state()?;
        let grid = state.grid;
        let mut ledger = Ledger::new(grid, cfg.zeta, cfg.p);
        ledger.shell_inner_factor = cfg.shell_inner_factor;
        let opts = EvolveOptions {
            dt: cfg.step_size(&grid),
            t_final: cfg.t_final,
            store_every: cfg.store_every,
            store_window: cfg.store_window,
            ..Default::default()
        };
        evolve_visit(&state, &opts, |view| ledger.observe(view))?;
        write_ledger_rows(Path::new(path), &cfg.raw, &ledger.rows)?;
        Ok(ledger.rows.len())
    });
    match result {
        Ok(rows) => {
            if !out_rows.is_null() {
                *out_rows = rows as c_int;
            }
            ClabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Releases a scenario handle. A null pointer is ignored.
///
/// # Safety
/// `scenario` must have come from [`clab_scenario_parse`] and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn clab_scenario_free(scenario: *mut ClabScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = "\
[grid]
d = 3
dr = 0.01
n = 1200
[time]
t_final = 2
store_every = 100
[data]
u0_kind = gaussian_shell
u0_center = 2.0
u0_width = 0.2
u0_amplitude = 1.0
";

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn version_is_nonempty() {
        let v = unsafe { CStr::from_ptr(clab_version()) };
        assert!(!v.to_str().unwrap().is_empty());
    }

    #[test]
    fn phi_and_psi_roundtrip_through_the_abi() {
        let mut v = 0.0;
        let mut dv = 0.0;
        let mut pv = 0.0;
        let mut pdv = 0.0;
        unsafe {
            assert!(clab_phi(3, 1.0, &mut v, &mut dv) == ClabStatus::Ok);
            assert!((v - 1.5906368546373290).abs() <= 1e-12);
            assert!(clab_psi(3, 1.0, &mut pv, &mut pdv) == ClabStatus::Ok);
            // Wronskian through the ABI.
            assert!((v * pdv - dv * pv + 1.0).abs() <= 1e-10);
            // Error path: out-of-range radius.
            assert!(clab_phi(3, 99.0, &mut v, &mut dv) != ClabStatus::Ok);
            let msg = CStr::from_ptr(clab_last_error_message());
            assert!(msg.to_str().unwrap().contains("exceeds"));
        }
    }

    #[test]
    fn admissibility_through_the_abi() {
        let mut verdict = ClabAdmissibility::NotAllowed;
        unsafe {
            // C vertex at d = 3: p = q = 14/3 on the equality edge.
            assert!(clab_pair_allowed(3, 14, 3, 14, 3, &mut verdict) == ClabStatus::Ok);
            assert!(verdict == ClabAdmissibility::EqualityEdge);
            // p = infinity, q = 6: the lower-edge vertex.
            assert!(clab_pair_allowed(3, 0, 0, 6, 1, &mut verdict) == ClabStatus::Ok);
            assert!(verdict == ClabAdmissibility::Interior);
            assert!(clab_pair_allowed(3, 2, 1, 6, 1, &mut verdict) == ClabStatus::Ok);
            assert!(verdict == ClabAdmissibility::NotAllowed);
            assert!(clab_pair_allowed(2, 3, 1, 6, 1, &mut verdict) != ClabStatus::Ok);
        }
    }

    #[test]
    fn scenario_lifecycle() {
        let text = cstr(CONFIG);
        let mut handle: *mut ClabScenario = std::ptr::null_mut();
        unsafe {
            assert!(clab_scenario_parse(text.as_ptr(), &mut handle) == ClabStatus::Ok);
        }
        assert!(!handle.is_null());

        let mut energy = 0.0;
        unsafe {
            assert!(clab_scenario_initial_energy(handle, &mut energy) == ClabStatus::Ok);
        }
        assert!(energy > 100.0 && energy < 130.0, "E = {energy}");

        // A bad override is rejected and does not stick.
        let key = cstr("time.t_final");
        let bad = cstr("1000");
        unsafe {
            assert!(clab_scenario_set(handle, key.as_ptr(), bad.as_ptr()) != ClabStatus::Ok);
        }
        let good = cstr("1");
        unsafe {
            assert!(clab_scenario_set(handle, key.as_ptr(), good.as_ptr()) == ClabStatus::Ok);
        }

        let dir = tempfile::tempdir().unwrap();
        let path = cstr(dir.path().join("ffi.csv").to_str().unwrap());
        let mut rows: c_int = 0;
        unsafe {
            assert!(clab_scenario_run_evolve(handle, path.as_ptr(), &mut rows) == ClabStatus::Ok);
        }
        assert!(rows >= 2, "rows = {rows}");
        unsafe {
            clab_scenario_free(handle);
            clab_scenario_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn parse_error_status_and_message() {
        let text = cstr("[grid]\nwhat\n");
        let mut handle: *mut ClabScenario = std::ptr::null_mut();
        unsafe {
            assert!(clab_scenario_parse(text.as_ptr(), &mut handle) == ClabStatus::ParseError);
            let msg = CStr::from_ptr(clab_last_error_message());
            assert!(msg.to_str().unwrap().contains("line 2"));
        }
    }
}
