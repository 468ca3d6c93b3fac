use std::ffi::{CStr, CString};
use std::ptr;

use bvdamage_ffi::*;

const CFG: &str = "grid.n = 4\nkappa = 0.2\nsigma_y = 1.5\nn_steps = 10\n";

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        bvd_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn model(text: &str) -> (BvdStatus, *mut BvdModel) {
    let c = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    let s = unsafe { bvd_model_new(c.as_ptr(), &mut m) };
    (s, m)
}

#[test]
fn solve_and_read_columns() {
    let (s, m) = model(CFG);
    assert_eq!(s, BvdStatus::Ok);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bvd_solve(m, &mut t) }, BvdStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { bvd_trajectory_len(t, &mut n) }, BvdStatus::Ok);
    assert_eq!(n, 11);
    let mut time = vec![0.0; n];
    let name = CString::new("t").unwrap();
    assert_eq!(unsafe { bvd_trajectory_column(t, name.as_ptr(), time.as_mut_ptr(), n) }, BvdStatus::Ok);
    assert_eq!(time[0], 0.0);
    assert!((time[10] - 1.0).abs() < 1e-15);
    let mut z = vec![0.0; n];
    let name = CString::new("min_z").unwrap();
    assert_eq!(unsafe { bvd_trajectory_column(t, name.as_ptr(), z.as_mut_ptr(), n) }, BvdStatus::Ok);
    assert!(z.windows(2).all(|w| w[1] <= w[0]));
    unsafe {
        bvd_trajectory_free(t);
        bvd_model_free(m);
    }
}

#[test]
fn column_errors() {
    let (_, m) = model(CFG);
    let mut t = ptr::null_mut();
    unsafe { bvd_solve(m, &mut t) };
    let mut buf = [0.0; 4];
    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { bvd_trajectory_column(t, bad.as_ptr(), buf.as_mut_ptr(), 4) }, BvdStatus::ErrInvalid);
    assert!(last_error().contains("nope"));
    let ok = CString::new("t").unwrap();
    assert_eq!(unsafe { bvd_trajectory_column(t, ok.as_ptr(), buf.as_mut_ptr(), 4) }, BvdStatus::ErrInvalid);
    assert!(last_error().contains("buffer"));
    unsafe {
        bvd_trajectory_free(t);
        bvd_model_free(m);
    }
}

#[test]
fn config_error_names_key() {
    let (s, m) = model("grid.n = 4\nbogus = 3\n");
    assert_eq!(s, BvdStatus::ErrConfig);
    assert!(m.is_null());
    assert!(last_error().contains("bogus"));
}

#[test]
fn null_arguments() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { bvd_model_new(ptr::null(), &mut m) }, BvdStatus::ErrNull);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bvd_solve(ptr::null(), &mut t) }, BvdStatus::ErrNull);
    let mut n = 0;
    assert_eq!(unsafe { bvd_trajectory_len(ptr::null(), &mut n) }, BvdStatus::ErrNull);
    unsafe {
        bvd_model_free(ptr::null_mut());
        bvd_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn gronwall_entry_points() {
    let a = [1.0, 1.5, 2.25];
    let b = [0.5, 0.5, 0.5];
    let (mut hyp, mut holds) = (0, 0);
    assert_eq!(unsafe { bvd_check_gronwall_classic(a.as_ptr(), b.as_ptr(), 3, 1.0, &mut hyp, &mut holds) }, BvdStatus::Ok);
    assert_eq!((hyp, holds), (1, 1));

    let data = CString::new("lemma = classic\na = 0, 0\nb = 0, 0\nbig_b = 0\n\nlemma = affine\na = 0, 0\nb = 0.1\nlambda = 2\nbig_lambda = 0\n").unwrap();
    let (mut count, mut all) = (0usize, 0);
    assert_eq!(unsafe { bvd_check_gronwall_data(data.as_ptr(), &mut count, &mut all) }, BvdStatus::Ok);
    assert_eq!((count, all), (2, 1));

    let bad = CString::new("lemma = sideways\n").unwrap();
    assert_eq!(unsafe { bvd_check_gronwall_data(bad.as_ptr(), &mut count, &mut all) }, BvdStatus::ErrConfig);
}

#[test]
fn version_is_cargo_version() {
    let v = unsafe { CStr::from_ptr(bvd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/bvdamage.h");
    let h = std::fs::read_to_string(path).unwrap();
    for f in ["bvd_model_new", "bvd_solve", "bvd_trajectory_column", "bvd_last_error_message", "BVD_STATUS_ERR_PANIC = 5"] {
        assert!(h.contains(f), "{f} missing from header");
    }
    // Syntax check only where a C compiler is present.
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", path]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
