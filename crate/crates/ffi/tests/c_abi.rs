use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use homog_ffi::*;

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/homog.h");
    for name in [
        "homog_last_error_message",
        "homog_spec_builtin",
        "homog_spec_from_json",
        "homog_spec_free",
        "homog_spec_dim",
        "homog_effective",
        "homog_effective_free",
        "homog_effective_len",
        "homog_effective_copy",
        "homog_beta_zero",
        "homog_effective_json",
        "homog_metrics_json",
        "homog_counterexample_json",
        "homog_string_free",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from homog.h");
    }
    assert!(header.contains("HOMOG_STATUS_SUFFICIENCY_VIOLATED = 4"));
}

#[test]
fn pendulum_beta_zero_and_metrics() {
    unsafe {
        let mut spec = ptr::null_mut();
        let json = CString::new(r#"{"kind":"mechanical","n":1,"potential":{"type":"fourier","modes":[{"k":[1],"cos":1.0}]}}"#).unwrap();
        assert_eq!(homog_spec_from_json(json.as_ptr(), &mut spec), HomogStatus::Ok);
        let mut eff = ptr::null_mut();
        let m = CString::new("minimax").unwrap();
        assert_eq!(homog_effective(spec, -3.0, 3.0, 65, m.as_ptr(), &mut eff), HomogStatus::Ok);
        assert_eq!(homog_effective_len(eff), 65);
        let mut b0 = 0.0;
        assert_eq!(homog_beta_zero(eff, &mut b0), HomogStatus::Ok);
        assert!((b0 + 1.0).abs() < 1e-2, "{b0}");
        let mut text = ptr::null_mut();
        let region = CString::new("sublevel:2").unwrap();
        assert_eq!(homog_metrics_json(spec, region.as_ptr(), &mut text), HomogStatus::Ok);
        let report = CStr::from_ptr(text).to_str().unwrap();
        assert!(report.contains("\"gamma_inf\": 1.0"), "{report}");
        homog_string_free(text);
        let bad = CString::new("sublevel:x").unwrap();
        assert_eq!(homog_metrics_json(spec, bad.as_ptr(), &mut text), HomogStatus::ConfigError);
        let mut short = [0.0; 3];
        assert_eq!(
            homog_effective_copy(eff, short.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), 3),
            HomogStatus::InvalidArgument
        );
        homog_effective_free(eff);
        homog_spec_free(spec);
    }
}

#[test]
fn counterexample_statuses() {
    unsafe {
        let mut text = ptr::null_mut();
        let mut verdict = -1;
        assert_eq!(homog_counterexample_json(0.25, 10.0, 0.05, &mut text, &mut verdict), HomogStatus::Ok);
        assert_eq!(verdict, 1);
        homog_string_free(text);
        assert_eq!(
            homog_counterexample_json(0.25, 0.05, 0.05, &mut text, ptr::null_mut()),
            HomogStatus::SufficiencyViolated
        );
        assert_eq!(
            homog_counterexample_json(0.4, 10.0, 0.05, &mut text, ptr::null_mut()),
            HomogStatus::ConfigError
        );
    }
}

/// Compiles a C program against the header and the static library, when a C compiler and the
/// archive are available.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libhomog_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "homog.h"
int main(void) {
    HomogSpec *spec = NULL;
    if (homog_spec_builtin("integrable", 1, &spec) != HOMOG_STATUS_OK) return 1;
    HomogEffective *eff = NULL;
    if (homog_effective(spec, -1.0, 1.0, 3, "minimax", &eff) != HOMOG_STATUS_OK) return 2;
    double v[3];
    if (homog_effective_copy(eff, v, NULL, NULL, 3) != HOMOG_STATUS_OK) return 3;
    printf("%.6f %.6f %.6f\n", v[0], v[1], v[2]);
    if (homog_spec_builtin("nope", 1, &spec) != HOMOG_STATUS_CONFIG_ERROR) return 4;
    if (homog_last_error_message() == NULL) return 5;
    homog_effective_free(eff);
    return 0;
}
"#,
    )
    .unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.500000 0.000000 0.500000");
}
