use std::ffi::{CStr, CString};
use std::ptr;

use blink_tweezer_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bt_last_error_message()) }.to_string_lossy().into_owned()
}

const W64: f64 = 2.0 * std::f64::consts::PI * 64e3;

#[test]
fn scalar_calls() {
    let mut t = 0.0;
    assert_eq!(unsafe { bt_resonant_ton_np1(W64, 10e-6, 0, &mut t) }, BtStatus::Ok);
    assert!((t - 1.147738e-6).abs() < 1e-12);

    let mut band = BtBand {
        t_on_min: 0.0,
        t_on_max: 0.0,
        empty: true,
    };
    assert_eq!(unsafe { bt_admissible_band(W64, 10e-6, 0, 1, &mut band) }, BtStatus::Ok);
    assert!(!band.empty);
    assert!(band.t_on_min < t && t < band.t_on_max);

    let mut m = 0u32;
    assert_eq!(unsafe { bt_max_atoms(1e-6, 10e-6, &mut m) }, BtStatus::Ok);
    assert_eq!(m, 11);

    let (mut periodic, mut residual) = (false, 1.0);
    assert_eq!(
        unsafe { bt_is_periodic(W64, t, 10e-6, 1, 1e-6, &mut periodic, &mut residual) },
        BtStatus::Ok
    );
    assert!(periodic && residual < 1e-6);
}

#[test]
fn errors_are_reported() {
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { bt_resonant_ton_np2(1.0, 1.0, &mut a, &mut b) }, BtStatus::Singular);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { bt_max_atoms(1e-6, 10e-6, ptr::null_mut()) }, BtStatus::NullPointer);
    assert!(last_error().contains("m must not be null"));
    let mut t = 0.0;
    assert_eq!(unsafe { bt_resonant_ton_np1(-1.0, 1e-6, 0, &mut t) }, BtStatus::InvalidArgument);
}

#[test]
fn maps_compose() {
    let mut c = BtMap {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };
    let mut p = c;
    unsafe {
        assert_eq!(bt_cycle_map(W64, 1e-6, 10e-6, &mut c), BtStatus::Ok);
        assert_eq!(bt_map_multiply(c, c, &mut p), BtStatus::Ok);
    }
    assert!((p.a * p.d - p.b * p.c - 1.0).abs() < 1e-9);
    let bad = BtMap {
        a: 2.0,
        b: 0.0,
        c: 0.0,
        d: 2.0,
    };
    let mut n = 0.0;
    assert_eq!(unsafe { bt_spectral_norm(bad, &mut n) }, BtStatus::InvalidArgument);
    let mut s = c;
    unsafe {
        bt_shear_map(3.0, &mut s);
        bt_spectral_norm(s, &mut n);
    }
    assert!((n - (1.5 + 3.25f64.sqrt())).abs() < 1e-12, "{n}");
}

#[test]
fn sim_handle_runs_grid() {
    let json = CString::new(
        r#"{"trap": {"kind": "harmonic_cutoff", "omega_khz": 79, "d_um": 0.9},
            "temperature_uk": 15, "n_blink": 5, "samples": 200, "seed": 3,
            "t_on_us": {"start": 1, "stop": 2, "points": 2}, "t_off_us": 0.5}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bt_sim_config_from_json(json.as_ptr(), &mut h) }, BtStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { bt_sim_cell_count(h, &mut n) }, BtStatus::Ok);
    assert_eq!(n, 2);
    let mut p = vec![0.0; n];
    let mut e = vec![0.0; n];
    assert_eq!(unsafe { bt_sim_run(h, p.as_mut_ptr(), e.as_mut_ptr(), n) }, BtStatus::Ok);
    assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v) && v > 0.5), "{p:?}");
    assert_eq!(unsafe { bt_sim_run(h, p.as_mut_ptr(), ptr::null_mut(), 1) }, BtStatus::InvalidArgument);
    unsafe { bt_sim_config_free(h) };

    let bad = CString::new(r#"{"trap": 1}"#).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bt_sim_config_from_json(bad.as_ptr(), &mut h) }, BtStatus::Config);
    assert!(h.is_null());
}

#[test]
fn schedule_handle() {
    let name = CString::new("vacancy").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { bt_builtin_scenario_json(name.as_ptr(), 20e-6, &mut json) }, BtStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"vacancy\""));

    let mut h = ptr::null_mut();
    let st = unsafe { bt_schedule_compile(json, 1.1e-6, 10e-6, 0, 0, 0.13, &mut h) };
    unsafe { bt_string_free(json) };
    assert_eq!(st, BtStatus::Ok, "{}", last_error());
    let mut cycles = 0;
    let mut violations = usize::MAX;
    unsafe {
        bt_schedule_cycle_count(h, &mut cycles);
        assert_eq!(bt_schedule_validate(h, 0.13, 7.5e-6, 1e-6, &mut violations), BtStatus::Ok);
    }
    assert_eq!(cycles, 200);
    assert_eq!(violations, 0);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { bt_schedule_to_json(h, &mut out) }, BtStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    assert_eq!(v["cycles"].as_array().unwrap().len(), 200);
    unsafe {
        bt_string_free(out);
        bt_schedule_free(h);
    }

    // Too few cycles for the drag speed.
    let c = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { bt_schedule_compile(c.as_ptr(), 1.1e-6, 10e-6, 0, 0, 1e-4, &mut h) };
    assert_eq!(st, BtStatus::Speed, "{}", last_error());
    assert!(h.is_null());

    let unknown = CString::new("spiral").unwrap();
    let mut json = ptr::null_mut();
    assert_ne!(unsafe { bt_builtin_scenario_json(unknown.as_ptr(), 20e-6, &mut json) }, BtStatus::Ok);
}
