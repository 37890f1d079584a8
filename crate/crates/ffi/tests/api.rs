use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dsfc_ffi::*;

fn demo_config() -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_example.json");
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(dsfc_last_error()) }.to_string_lossy().into_owned()
}

fn problem() -> *mut DsfcProblem {
    let mut p = ptr::null_mut();
    let st = unsafe { dsfc_problem_from_json(demo_config().as_ptr(), &mut p) };
    assert_eq!(st, DsfcStatus::DsfcOk, "{}", last_error());
    assert!(!p.is_null());
    p
}

#[test]
fn dimensions_of_the_demo_plant() {
    let p = problem();
    let (mut n, mut m, mut d) = (0usize, 0usize, 0usize);
    let st = unsafe { dsfc_problem_dims(p, &mut n, ptr::null_mut(), ptr::null_mut(), &mut m, &mut d) };
    assert_eq!(st, DsfcStatus::DsfcOk);
    assert_eq!((n, m, d), (2, 2, 5));
    unsafe { dsfc_problem_free(p) };
}

#[test]
fn malformed_config_reports_path() {
    let bad = CString::new(r#"{"plant": {"A": [[1.0]], "B": "x"}}"#).unwrap();
    let mut p = ptr::null_mut();
    let st = unsafe { dsfc_problem_from_json(bad.as_ptr(), &mut p) };
    assert_eq!(st, DsfcStatus::DsfcErrConfig);
    assert!(p.is_null());
    assert!(last_error().contains("plant.B"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dsfc_problem_from_json(ptr::null(), &mut p) }, DsfcStatus::DsfcErrNull);
    assert!(last_error().contains("json"));
    let cfg = demo_config();
    assert_eq!(
        unsafe { dsfc_problem_from_json(cfg.as_ptr(), ptr::null_mut()) },
        DsfcStatus::DsfcErrNull
    );
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { dsfc_predictor_seed(ptr::null(), &mut g) }, DsfcStatus::DsfcErrNull);
    unsafe {
        dsfc_problem_free(ptr::null_mut());
        dsfc_gains_free(ptr::null_mut());
        dsfc_string_free(ptr::null_mut());
    }
}

#[test]
fn seed_gains_are_stable_and_round_trip() {
    let p = problem();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { dsfc_predictor_seed(p, &mut g) }, DsfcStatus::DsfcOk);

    let (mut rows, mut cols) = (0usize, 0usize);
    assert_eq!(unsafe { dsfc_gains_shape(g, &mut rows, &mut cols) }, DsfcStatus::DsfcOk);
    assert_eq!((rows, cols), (1, 21));
    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { dsfc_gains_copy(g, small.as_mut_ptr(), small.len()) },
        DsfcStatus::DsfcErrBuffer
    );
    let mut k = vec![0.0; rows * cols];
    assert_eq!(unsafe { dsfc_gains_copy(g, k.as_mut_ptr(), k.len()) }, DsfcStatus::DsfcOk);
    // K2 of the seed vanishes.
    assert!(k[3..6].iter().all(|v| *v == 0.0));

    let mut gamma = 0.0;
    assert_eq!(unsafe { dsfc_gains_gamma(g, &mut gamma) }, DsfcStatus::DsfcOk);
    assert!(gamma.is_nan());

    let (mut alpha, mut conv): (f64, c_int) = (0.0, 0);
    assert_eq!(unsafe { dsfc_spectral_abscissa(p, g, &mut alpha, &mut conv) }, DsfcStatus::DsfcOk);
    assert_eq!(conv, 1);
    assert!((alpha + 0.1).abs() < 1e-3, "{alpha}");

    let mut text: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { dsfc_gains_to_json(g, &mut text) }, DsfcStatus::DsfcOk);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { dsfc_gains_from_json(text, &mut back) }, DsfcStatus::DsfcOk);
    let mut k2 = vec![0.0; rows * cols];
    unsafe { dsfc_gains_copy(back, k2.as_mut_ptr(), k2.len()) };
    assert_eq!(k, k2);
    unsafe {
        dsfc_string_free(text);
        dsfc_gains_free(back);
        dsfc_gains_free(g);
        dsfc_problem_free(p);
    }
}

#[test]
fn synthesize_then_verify() {
    let p = problem();
    let mut g = ptr::null_mut();
    let st = unsafe { dsfc_synthesize(p, 2, &mut g) };
    assert_eq!(st, DsfcStatus::DsfcOk, "{}", last_error());
    let mut gamma = 0.0;
    unsafe { dsfc_gains_gamma(g, &mut gamma) };
    assert!(gamma > 0.0 && gamma < 0.3, "{gamma}");

    let mut passed: c_int = 0;
    let mut report: *mut c_char = ptr::null_mut();
    let st = unsafe { dsfc_verify(p, g, 7, &mut passed, &mut report) };
    assert_eq!(st, DsfcStatus::DsfcOk, "{}", last_error());
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    assert_eq!(passed, 1, "{text}");
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(json["spectrum"]["abscissa"].as_f64().unwrap() < 0.0);
    unsafe {
        dsfc_string_free(report);
        dsfc_gains_free(g);
        dsfc_problem_free(p);
    }
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/dsfc.h")).unwrap();
    let source = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").arg("--version").output() else {
        return;
    };
    if !out.status.success() {
        return;
    }
    let tmp = std::env::temp_dir().join(format!("dsfc_header_{}.c", std::process::id()));
    std::fs::write(
        &tmp,
        "#include \"dsfc.h\"\nint main(void) { DsfcProblem *p = 0; DsfcStatus s = dsfc_problem_from_json(\"{}\", &p); \
         (void)s; dsfc_problem_free(p); return 0; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&tmp)
        .status()
        .unwrap();
    let _ = std::fs::remove_file(&tmp);
    assert!(status.success());
}
