use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cdsentry_ffi::*;

const MINT: &str = include_str!("../../core/tests/fixtures/canonical/mint.sol");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cds_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn scan_round_trip_through_the_c_api() {
    unsafe {
        let s = cds_scanner_new();
        let mut r = ptr::null_mut();
        assert_eq!(cds_scan_source(s, c("mint.sol").as_ptr(), c(MINT).as_ptr(), &mut r), CdsStatus::Ok);
        assert!(last_error().is_empty());
        let mut has = false;
        assert_eq!(cds_report_has_defect(r, c("MFS").as_ptr(), &mut has), CdsStatus::Ok);
        assert!(has);
        assert_eq!(cds_report_has_defect(r, ptr::null(), &mut has), CdsStatus::Ok);
        assert!(has);
        assert_eq!(cds_report_has_defect(r, c("XX").as_ptr(), &mut has), CdsStatus::InvalidArgument);

        let mut json = ptr::null_mut();
        assert_eq!(cds_report_to_json(r, &mut json), CdsStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(v["file"], "mint.sol");
        assert_eq!(v["contracts"][0]["findings"][0]["kind"], "MFS");
        cds_string_free(json);
        cds_report_free(r);
        cds_scanner_free(s);
    }
}

#[test]
fn rules_and_flags_change_the_scan() {
    unsafe {
        let s = cds_scanner_new();
        assert_eq!(cds_scanner_set_rules(s, c("CVS").as_ptr()), CdsStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(cds_scan_source(s, ptr::null(), c(MINT).as_ptr(), &mut r), CdsStatus::Ok);
        assert_eq!(cds_report_finding_count(r), 0);
        cds_report_free(r);

        assert_eq!(cds_scanner_set_flag(s, c("ior_distinct_sites").as_ptr(), true), CdsStatus::Ok);
        assert_eq!(cds_scanner_set_flag(s, c("colour").as_ptr(), true), CdsStatus::InvalidArgument);
        assert!(last_error().contains("colour"));

        assert_eq!(cds_scanner_set_flag(s, c("unsupported_is_error").as_ptr(), true), CdsStatus::Ok);
        let src = c("uint constant X = 1; contract A {}");
        assert_eq!(cds_scan_source(s, ptr::null(), src.as_ptr(), &mut r), CdsStatus::ParseError);
        assert!(!r.is_null());
        cds_report_free(r);
        cds_scanner_free(s);
    }
}

#[test]
fn bad_arguments_are_reported_not_crashed_on() {
    unsafe {
        let mut r = ptr::null_mut();
        assert_eq!(cds_scan_source(ptr::null(), ptr::null(), c("contract A {}").as_ptr(), &mut r), CdsStatus::NullArgument);
        assert!(r.is_null());
        let s = cds_scanner_new();
        assert_eq!(cds_scan_source(s, ptr::null(), ptr::null(), &mut r), CdsStatus::NullArgument);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(cds_scan_source(s, ptr::null(), bad.as_ptr().cast(), &mut r), CdsStatus::InvalidUtf8);
        assert_eq!(cds_scan_file(s, c("/no/such/file.sol").as_ptr(), &mut r), CdsStatus::Io);
        assert!(r.is_null());
        assert_eq!(cds_scanner_set_rules(ptr::null_mut(), c("MFS").as_ptr()), CdsStatus::NullArgument);
        assert_eq!(cds_report_to_json(ptr::null(), &mut ptr::null_mut()), CdsStatus::NullArgument);
        assert_eq!(cds_report_finding_count(ptr::null()), 0);
        cds_report_free(ptr::null_mut());
        cds_string_free(ptr::null_mut());
        cds_scanner_free(ptr::null_mut());
        cds_scanner_free(s);
    }
}

#[test]
fn scan_file_reads_from_disk() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/canonical/selfdestruct.sol");
    unsafe {
        let s = cds_scanner_new();
        let mut r = ptr::null_mut();
        assert_eq!(cds_scan_file(s, c(path.to_str().unwrap()).as_ptr(), &mut r), CdsStatus::Ok);
        let mut has = false;
        cds_report_has_defect(r, c("SS").as_ptr(), &mut has);
        assert!(has);
        cds_report_free(r);
        cds_scanner_free(s);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cds_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Builds tests/c/smoke.c against the generated header and the static
/// library, then runs it.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("cdsentry.h").exists(), "header not generated");
    // test binary lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libcdsentry_ffi.a");
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    if !lib.exists() {
        // still check that the header compiles on its own
        let st = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&header_dir)
            .arg(manifest.join("tests/c/smoke.c"))
            .status()
            .unwrap();
        assert!(st.success());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let st = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&header_dir)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
