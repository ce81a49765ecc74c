//! C interface to the scanner.
//!
//! Objects are opaque and owned by the caller once returned: free scanners
//! with `cds_scanner_free`, reports with `cds_report_free` and strings with
//! `cds_string_free`. Every fallible call returns a `CdsStatus`; on failure
//! `cds_last_error_message` describes the problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::str::FromStr;

use cdsentry::analysis::{scan_source, AnalysisOptions};
use cdsentry::cli::config::parse_rules;
use cdsentry::detector::{DefectKind, ScanReport};
use cdsentry::frontend::{Severity, SourceFile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// The source had syntax errors; a report with the diagnostics is still
    /// returned.
    ParseError = 3,
    InvalidArgument = 4,
    Io = 5,
    Panic = 6,
}

/// Scan settings.
pub struct CdsScanner {
    options: AnalysisOptions,
}

/// Result of scanning one source.
pub struct CdsReport {
    report: ScanReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut m = msg.into();
    m.retain(|c| c != '\0');
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(m).expect("nul removed"));
}

fn fail(status: CdsStatus, msg: impl Into<String>) -> CdsStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> CdsStatus) -> CdsStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CdsStatus::Panic, "internal error"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, CdsStatus> {
    if p.is_null() {
        return Err(fail(CdsStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(CdsStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn finish(report: ScanReport, out: *mut *mut CdsReport) -> CdsStatus {
    let status = if report.has_errors() {
        let first = report.diagnostics.iter().find(|d| d.severity == Severity::Error).map(|d| format!("{}: {}", d.span, d.message));
        fail(CdsStatus::ParseError, first.unwrap_or_default())
    } else {
        CdsStatus::Ok
    };
    unsafe { *out = Box::into_raw(Box::new(CdsReport { report })) };
    status
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, nul-terminated version string.
#[no_mangle]
pub extern "C" fn cds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New scanner with every rule enabled. Never null.
#[no_mangle]
pub extern "C" fn cds_scanner_new() -> *mut CdsScanner {
    Box::into_raw(Box::new(CdsScanner { options: AnalysisOptions::default() }))
}

/// # Safety
/// `scanner` must come from `cds_scanner_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cds_scanner_free(scanner: *mut CdsScanner) {
    if !scanner.is_null() {
        drop(Box::from_raw(scanner));
    }
}

/// Enables exactly the comma-separated defect codes in `rules`, e.g.
/// `"MFS,CVS"`. An empty string disables all rules.
///
/// # Safety
/// `scanner` must be live; `rules` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cds_scanner_set_rules(scanner: *mut CdsScanner, rules: *const c_char) -> CdsStatus {
    guard(|| {
        let Some(s) = scanner.as_mut() else { return fail(CdsStatus::NullArgument, "scanner is null") };
        let r = match text(rules, "rules") {
            Ok(r) => r,
            Err(st) => return st,
        };
        match parse_rules(r.split(',')) {
            Ok(set) => {
                s.options.rules = set;
                CdsStatus::Ok
            }
            Err(e) => fail(CdsStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Flags: `ior_distinct_sites`, `ior_respect_guards`,
/// `exclude_privilege_vars`, `unsupported_is_error`.
///
/// # Safety
/// `scanner` must be live; `name` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cds_scanner_set_flag(scanner: *mut CdsScanner, name: *const c_char, value: bool) -> CdsStatus {
    guard(|| {
        let Some(s) = scanner.as_mut() else { return fail(CdsStatus::NullArgument, "scanner is null") };
        let n = match text(name, "name") {
            Ok(n) => n,
            Err(st) => return st,
        };
        let o = &mut s.options;
        match n {
            "ior_distinct_sites" => o.sensors.taint.distinct_sites = value,
            "ior_respect_guards" => o.sensors.taint.respect_guards = value,
            "exclude_privilege_vars" => o.sensors.exclude_privilege_vars = value,
            "unsupported_is_error" => {
                o.parse.unsupported_severity = if value { Severity::Error } else { Severity::Warning }
            }
            _ => return fail(CdsStatus::InvalidArgument, format!("unknown flag `{n}`")),
        }
        CdsStatus::Ok
    })
}

/// Scans `source`, reporting it under `path` (may be null). On `Ok` and
/// `ParseError` `*out` receives a report the caller must free; otherwise it
/// is set to null.
///
/// # Safety
/// `scanner` must be live, strings nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cds_scan_source(
    scanner: *const CdsScanner,
    path: *const c_char,
    source: *const c_char,
    out: *mut *mut CdsReport,
) -> CdsStatus {
    guard(|| {
        if out.is_null() {
            return fail(CdsStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(s) = scanner.as_ref() else { return fail(CdsStatus::NullArgument, "scanner is null") };
        let p = if path.is_null() { "<input>" } else { match text(path, "path") { Ok(p) => p, Err(st) => return st } };
        let src = match text(source, "source") {
            Ok(t) => t,
            Err(st) => return st,
        };
        finish(scan_source(&SourceFile::new(p, src), &s.options), out)
    })
}

/// Reads and scans the file at `path`. Same ownership rules as
/// `cds_scan_source`.
///
/// # Safety
/// `scanner` must be live, `path` nul-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cds_scan_file(scanner: *const CdsScanner, path: *const c_char, out: *mut *mut CdsReport) -> CdsStatus {
    guard(|| {
        if out.is_null() {
            return fail(CdsStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(s) = scanner.as_ref() else { return fail(CdsStatus::NullArgument, "scanner is null") };
        let p = match text(path, "path") {
            Ok(p) => p,
            Err(st) => return st,
        };
        match SourceFile::read(Path::new(p)) {
            Ok(f) => finish(scan_source(&f, &s.options), out),
            Err(e @ cdsentry::frontend::FrontendError::InvalidUtf8 { .. }) => fail(CdsStatus::InvalidUtf8, e.to_string()),
            Err(e) => fail(CdsStatus::Io, e.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from a scan call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cds_report_free(report: *mut CdsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Serializes the report as JSON into `*out`, to be released with
/// `cds_string_free`.
///
/// # Safety
/// `report` must be live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cds_report_to_json(report: *const CdsReport, out: *mut *mut c_char) -> CdsStatus {
    guard(|| {
        if out.is_null() {
            return fail(CdsStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(r) = report.as_ref() else { return fail(CdsStatus::NullArgument, "report is null") };
        let json = serde_json::to_string(&r.report).expect("report serializes");
        // JSON escapes control characters, so there is no interior nul
        *out = CString::new(json).expect("no nul in JSON").into_raw();
        CdsStatus::Ok
    })
}

/// Sets `*out` to whether any contract has an unsuppressed defect of
/// `code`, or of any kind when `code` is null.
///
/// # Safety
/// `report` must be live, `out` writable, `code` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cds_report_has_defect(report: *const CdsReport, code: *const c_char, out: *mut bool) -> CdsStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return fail(CdsStatus::NullArgument, "report is null") };
        if out.is_null() {
            return fail(CdsStatus::NullArgument, "out is null");
        }
        *out = if code.is_null() {
            r.report.has_defect()
        } else {
            let c = match text(code, "code") {
                Ok(c) => c,
                Err(st) => return st,
            };
            match DefectKind::from_str(c) {
                Ok(k) => r.report.contracts.iter().any(|c| c.has(k)),
                Err(e) => return fail(CdsStatus::InvalidArgument, e.to_string()),
            }
        };
        CdsStatus::Ok
    })
}

/// Number of findings, suppressed ones included. Zero for null.
///
/// # Safety
/// `report` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn cds_report_finding_count(report: *const CdsReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.findings().count())
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
