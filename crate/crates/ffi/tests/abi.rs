use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use btbs_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(btbs_last_error()) }.to_string_lossy().into_owned()
}

fn lab(family: u32, n: usize, theta: f64) -> *mut BtbsLab {
    let p = [theta];
    let h = unsafe { btbs_lab_new(family, n, 1, BTBS_DATA_COSINE, p.as_ptr(), 1) };
    assert!(!h.is_null(), "{}", last_error());
    h
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(btbs_version()) }.to_str().unwrap();
    assert_eq!(v, btbs::VERSION);
}

#[test]
fn btbs_quadrature_matches_library() {
    let h = lab(BTBS_FAMILY_BTBS, 1, 1.0);
    let (t, x) = ([1.0], [0.0]);
    let (mut re, mut im, mut err) = (f64::NAN, f64::NAN, f64::NAN);
    let s = unsafe { btbs_quad_moment(h, 0, -1, t.as_ptr(), x.as_ptr(), 0, &mut re, &mut im, &mut err) };
    assert_eq!(s, BtbsStatus::Ok, "{}", last_error());
    assert!((re - 0.699_237_669_440_735).abs() < 1e-12);
    assert_eq!(im, 0.0);
    assert!(err <= 1e-9);
    assert_eq!(last_error(), "");
    unsafe { btbs_lab_free(h) };
}

#[test]
fn ks_quadrature_is_complex_valued() {
    let h = lab(BTBS_FAMILY_KS, 1, 1.0);
    let (t, x) = ([1.0], [0.0]);
    let (mut re, mut im) = (0.0, 0.0);
    let s = unsafe { btbs_quad_moment(h, 0, -1, t.as_ptr(), x.as_ptr(), 0, &mut re, &mut im, ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::Ok);
    assert!((re - 0.882_496_902_584_595_3).abs() < 1e-12);
    assert!(im.abs() < 1e-14);
    unsafe { btbs_lab_free(h) };
}

#[test]
fn monte_carlo_is_reproducible_across_workers() {
    let h = lab(BTBS_FAMILY_BTBS, 2, 0.8);
    let (t, x) = ([1.0, 0.5], [0.2]);
    let run = |workers| {
        let (mut v, mut e) = (0.0, 0.0);
        let s = unsafe { btbs_mc_moment(h, 0, -1, t.as_ptr(), x.as_ptr(), 40_000, 7, 0, workers, &mut v, &mut e) };
        assert_eq!(s, BtbsStatus::Ok, "{}", last_error());
        (v, e)
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1.to_bits(), b.1.to_bits());
    let (mut q, mut im) = (0.0, 0.0);
    unsafe { btbs_quad_moment(h, 0, -1, t.as_ptr(), x.as_ptr(), 0, &mut q, &mut im, ptr::null_mut()) };
    assert!((a.0 - q).abs() < 5.0 * a.1);
    unsafe { btbs_lab_free(h) };
}

#[test]
fn residual_of_sheet_system_is_small() {
    let h = lab(BTBS_FAMILY_BS, 2, 1.0);
    let (t, x) = ([1.0, 1.5], [0.3]);
    let (mut rel, mut abs) = (f64::NAN, f64::NAN);
    let s = unsafe {
        btbs_residual(h, BTBS_SYSTEM_BS_LIN, 0, t.as_ptr(), x.as_ptr(), BTBS_ROUTE_ANALYTIC, &mut rel, &mut abs)
    };
    assert_eq!(s, BtbsStatus::Ok, "{}", last_error());
    assert!(rel < 1e-12 && abs < 1e-12);
    unsafe { btbs_lab_free(h) };
}

#[test]
fn errors_map_to_status_codes() {
    let p = [1.0];
    let bad = unsafe { btbs_lab_new(9, 1, 1, BTBS_DATA_COSINE, p.as_ptr(), 1) };
    assert!(bad.is_null());
    assert!(last_error().contains("family"));
    let bad = unsafe { btbs_lab_new(BTBS_FAMILY_BTBS, 1, 2, BTBS_DATA_COSINE, p.as_ptr(), 1) };
    assert!(bad.is_null());

    let (t, x) = ([1.0], [0.0]);
    let mut v = 0.0;
    let s = unsafe {
        btbs_quad_moment(ptr::null(), 0, -1, t.as_ptr(), x.as_ptr(), 0, &mut v, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(s, BtbsStatus::NullPointer);

    let h = lab(BTBS_FAMILY_BTBS, 1, 1.0);
    let s = unsafe { btbs_quad_moment(h, 0, -1, ptr::null(), x.as_ptr(), 0, &mut v, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::NullPointer);
    let s = unsafe { btbs_quad_moment(h, 3, -1, t.as_ptr(), x.as_ptr(), 0, &mut v, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    let zero = [0.0];
    let s =
        unsafe { btbs_quad_moment(h, 0, -1, zero.as_ptr(), x.as_ptr(), 0, &mut v, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::Domain);
    let s = unsafe { btbs_residual(h, 42, 0, t.as_ptr(), x.as_ptr(), 0, &mut v, ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::InvalidArgument);
    unsafe { btbs_lab_free(h) };
    unsafe { btbs_lab_free(ptr::null_mut()) };
}

#[test]
fn fixed_low_order_reports_accuracy_failure() {
    let h = lab(BTBS_FAMILY_KS, 2, 3.0);
    let (t, x) = ([2.0, 2.0], [0.1]);
    let mut v = 0.0;
    let s = unsafe { btbs_quad_moment(h, 0, -1, t.as_ptr(), x.as_ptr(), 4, &mut v, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, BtbsStatus::Accuracy, "{}", last_error());
    unsafe { btbs_lab_free(h) };
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = root.join("include");
    assert!(header_dir.join("btbs.h").exists());
    let Ok(cc) = which("cc") else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().unwrap().parent().unwrap();
    let lib = target_dir.join("libbtbs_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping link", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "btbs.h"
int main(void) {
    double theta = 1.0, t = 1.0, x = 0.0, re = 0.0, im = 0.0, err = 0.0;
    BtbsLab *lab = btbs_lab_new(BTBS_FAMILY_BTBS, 1, 1, BTBS_DATA_COSINE, &theta, 1);
    if (!lab) return 10;
    BtbsStatus s = btbs_quad_moment(lab, 0, -1, &t, &x, 0, &re, &im, &err);
    btbs_lab_free(lab);
    if (s != BTBS_STATUS_OK) return 11;
    printf("%.12f\n", re);
    return 0;
}
"#,
    )
    .unwrap();
    let out = dir.path().join("main");
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "0.699237669441");
}

fn which(name: &str) -> Result<PathBuf, ()> {
    std::env::var_os("PATH")
        .and_then(|p| std::env::split_paths(&p).map(|d| d.join(name)).find(|c| c.exists()))
        .ok_or(())
}
