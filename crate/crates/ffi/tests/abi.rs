use std::ffi::{c_char, c_int, CStr};
use std::ptr;

use fradic_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { fradic_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn zone(a1: f64, a2: f64) -> FradicActuator {
    FradicActuator { kind: FradicActuatorKind::Zone, a1, a2, sigma: 0.0, gain: 1.0 }
}

fn system(alpha: f64, modes: usize) -> *mut FradicSystem {
    let acts = [zone(0.0, 0.5)];
    let mut sys = ptr::null_mut();
    let st = unsafe { fradic_system_new(alpha, 1.0, modes, acts.as_ptr(), acts.len(), &mut sys) };
    assert_eq!(st, FradicStatus::Ok);
    sys
}

fn region(lo: f64, hi: f64) -> *mut FradicRegion {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { fradic_region_new(lo, hi, &mut r) }, FradicStatus::Ok);
    r
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fradic_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn mittag_leffler_matches_exponential() {
    let mut out = 0.0;
    assert_eq!(unsafe { fradic_mittag_leffler(1.0, 1.0, -2.0, &mut out) }, FradicStatus::Ok);
    assert!((out - (-2.0f64).exp()).abs() < 1e-15);
    assert_eq!(unsafe { fradic_mittag_leffler(-1.0, 1.0, 0.5, &mut out) }, FradicStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { fradic_mittag_leffler(0.5, 1.0, 0.0, ptr::null_mut()) }, FradicStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut e = 0.0;
    let st = unsafe { fradic_hum_summary(ptr::null(), &mut e, &mut e, &mut e, ptr::null_mut()) };
    assert_eq!(st, FradicStatus::NullPointer);
    unsafe {
        fradic_system_free(ptr::null_mut());
        fradic_region_free(ptr::null_mut());
        fradic_hum_free(ptr::null_mut());
    }
}

#[test]
fn error_message_is_truncated_safely() {
    let mut out = 0.0;
    unsafe { fradic_mittag_leffler(f64::NAN, 1.0, 0.0, &mut out) };
    let mut buf = [1 as c_char; 4];
    let n = unsafe { fradic_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
}

#[test]
fn half_zone_fails_every_fourth_level() {
    let acts = [zone(0.0, 0.5)];
    let (mut strategic, mut n_failed) = (1 as c_int, 0usize);
    let mut failed = [0usize; 8];
    let st = unsafe {
        fradic_strategic_test(acts.as_ptr(), 1, 16, &mut strategic, failed.as_mut_ptr(), failed.len(), &mut n_failed)
    };
    assert_eq!(st, FradicStatus::Ok);
    assert_eq!(strategic, 0);
    assert_eq!(&failed[..n_failed], &[4, 8, 12, 16]);
}

#[test]
fn low_order_gramian_is_non_integrable() {
    let sys = system(0.5, 8);
    let r = region(0.25, 0.75);
    let (mut lmin, mut pd, mut n) = (0.0, 0 as c_int, 0usize);
    let st = unsafe { fradic_gramian(sys, r, 0, &mut lmin, &mut pd, &mut n) };
    assert_eq!(st, FradicStatus::NonIntegrable);
    assert!(last_error().contains("non-integrable"));
    unsafe {
        fradic_region_free(r);
        fradic_system_free(sys);
    }
}

#[test]
fn regional_hum_round_trip() {
    let sys = system(0.75, 16);
    let r = region(0.25, 0.75);
    let (mut lmin, mut pd, mut n) = (0.0, 0 as c_int, 0usize);
    assert_eq!(unsafe { fradic_gramian(sys, r, 0, &mut lmin, &mut pd, &mut n) }, FradicStatus::Ok);
    assert_eq!(pd, 1);
    assert!(lmin > 0.0 && n > 0);

    let mut target = [0.0; 16];
    target[0] = 1.0;
    let mut wrong = ptr::null_mut();
    let st = unsafe { fradic_hum_solve(sys, r, target.as_ptr(), 3, -1.0, 0, &mut wrong) };
    assert_eq!(st, FradicStatus::InvalidArgument);
    assert!(wrong.is_null());

    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { fradic_hum_solve(sys, r, target.as_ptr(), 16, -1.0, 0, &mut sol) }, FradicStatus::Ok);
    let (mut energy, mut res, mut rel, mut conv) = (0.0, 0.0, 0.0, 0 as c_int);
    assert_eq!(unsafe { fradic_hum_summary(sol, &mut energy, &mut res, &mut rel, &mut conv) }, FradicStatus::Ok);
    assert!(energy > 0.0 && res >= 0.0 && rel >= 0.0);

    let (mut m, mut p) = (0usize, 0usize);
    let st = unsafe { fradic_hum_control(sol, ptr::null_mut(), ptr::null_mut(), 0, &mut m, &mut p) };
    assert_eq!(st, FradicStatus::BufferTooSmall);
    assert_eq!(p, 1);
    let (mut times, mut values) = (vec![0.0; m], vec![0.0; m * p]);
    let st = unsafe { fradic_hum_control(sol, times.as_mut_ptr(), values.as_mut_ptr(), m, &mut m, &mut p) };
    assert_eq!(st, FradicStatus::Ok);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    assert!(values.iter().all(|v| v.is_finite()));
    unsafe {
        fradic_hum_free(sol);
        fradic_region_free(r);
        fradic_system_free(sys);
    }
}

#[test]
fn initial_state_is_validated() {
    let sys = system(0.75, 4);
    let z0 = [1.0, 0.0, 0.0, 0.0];
    assert_eq!(unsafe { fradic_system_set_initial(sys, z0.as_ptr(), 4, 0) }, FradicStatus::Ok);
    assert_eq!(unsafe { fradic_system_set_initial(sys, z0.as_ptr(), 3, 1) }, FradicStatus::InvalidArgument);
    unsafe { fradic_system_free(sys) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fradic.h")).unwrap();
    for name in [
        "fradic_last_error",
        "fradic_version",
        "fradic_mittag_leffler",
        "fradic_system_new",
        "fradic_system_set_initial",
        "fradic_system_free",
        "fradic_region_new",
        "fradic_region_free",
        "fradic_strategic_test",
        "fradic_gramian",
        "fradic_hum_solve",
        "fradic_hum_summary",
        "fradic_hum_control",
        "fradic_hum_free",
        "FRADIC_STATUS_NON_INTEGRABLE = 3",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
