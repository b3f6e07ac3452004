use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use jnlab_ffi::*;
use serde_json::Value;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { jn_string_free(s) };
    out
}

fn last_error() -> String {
    take(jn_last_error())
}

#[test]
fn standard_sequence_passes_the_check() {
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { jn_sequence_standard(&mut seq) }, JnStatus::Ok);
    let tol = CString::new("1/10").unwrap();
    let mut verdict = ptr::null_mut();
    assert_eq!(unsafe { jn_check_fsjn(seq, 6, 12, tol.as_ptr(), &mut verdict) }, JnStatus::Ok);
    let mut passed = false;
    assert_eq!(unsafe { jn_verdict_passed(verdict, &mut passed) }, JnStatus::Ok);
    assert!(passed);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { jn_verdict_render(verdict, false, &mut text) }, JnStatus::Ok);
    let v: Value = serde_json::from_str(&take(text)).unwrap();
    assert_eq!(v["rows"][1]["max_abs"], "1/4");
    assert!(jn_last_error().is_null());

    let mut term = ptr::null_mut();
    assert_eq!(unsafe { jn_sequence_term_json(seq, 0, &mut term) }, JnStatus::Ok);
    let t: Value = serde_json::from_str(&take(term)).unwrap();
    assert_eq!(t["atomic"]["atoms"].as_array().unwrap().len(), 2);
    unsafe {
        jn_verdict_free(verdict);
        jn_sequence_free(seq);
    }
}

#[test]
fn failed_checks_still_return_the_verdict() {
    let terms = r#"[{"atoms":[{"point":{"prefix":"","tail":0},"weight":"1/1"}]},
                    {"atoms":[{"point":{"prefix":"","tail":0},"weight":"1/1"}]}]"#;
    let json = CString::new(terms).unwrap();
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { jn_sequence_from_json(json.as_ptr(), &mut seq) }, JnStatus::Ok, "{}", last_error());
    let tol = CString::new("1/10").unwrap();
    let mut verdict = ptr::null_mut();
    assert_eq!(unsafe { jn_check_fsjn(seq, 4, 2, tol.as_ptr(), &mut verdict) }, JnStatus::VerificationFailed);
    assert!(!verdict.is_null());
    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { jn_verdict_render(verdict, true, &mut csv) }, JnStatus::Ok);
    assert_eq!(take(csv).lines().count(), 3);
    unsafe {
        jn_verdict_free(verdict);
        jn_sequence_free(seq);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut seq = ptr::null_mut();
    assert_eq!(unsafe { jn_sequence_comb(8, 4, &mut seq) }, JnStatus::ConstructionError);
    assert!(last_error().contains("convergence"));
    assert_eq!(unsafe { jn_sequence_standard(ptr::null_mut()) }, JnStatus::NullPointer);

    let bad = CString::new("[{").unwrap();
    assert_eq!(unsafe { jn_sequence_from_json(bad.as_ptr(), &mut seq) }, JnStatus::ParseError);

    assert_eq!(unsafe { jn_sequence_independent(&mut seq) }, JnStatus::Ok);
    let tol = CString::new("1/10").unwrap();
    let mut verdict = ptr::null_mut();
    assert_eq!(unsafe { jn_check_fsjn(seq, 21, 4, tol.as_ptr(), &mut verdict) }, JnStatus::DepthExceeded);
    assert!(verdict.is_null());
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { jn_sequence_term_json(ptr::null(), 0, &mut text) }, JnStatus::NullPointer);
    unsafe {
        jn_sequence_free(seq);
        jn_sequence_free(ptr::null_mut());
        jn_string_free(ptr::null_mut());
    }
}

#[test]
fn configs_run_like_the_command_line() {
    let cfg = r#"{"seed": 1, "out": "ignored.json", "command": "systems",
                  "args": {"kind": "pipeline",
                           "source": {"policy": {"kind": "fixed-point"}, "steps": 32, "system": null},
                           "budget": null, "depth": 14, "terms": 12, "verify_depth": 6, "tol": "1/10",
                           "rule": {"kind": "half-half"}}}"#;
    let cfg = CString::new(cfg).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { jn_run_config(cfg.as_ptr(), &mut out) }, JnStatus::Ok, "{}", last_error());
    let v: Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(v["witness"]["kind"], "scattered");
    assert_eq!(v["verdict"]["passed"], true);

    let broken = CString::new(r#"{"seed": 1}"#).unwrap();
    assert_eq!(unsafe { jn_run_config(broken.as_ptr(), &mut out) }, JnStatus::ParseError);
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libjnlab_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
