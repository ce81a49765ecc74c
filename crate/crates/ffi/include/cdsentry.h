#ifndef CDSENTRY_H
#define CDSENTRY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdsStatus {
  CDS_STATUS_OK = 0,
  CDS_STATUS_NULL_ARGUMENT = 1,
  CDS_STATUS_INVALID_UTF8 = 2,
  /**
   * The source had syntax errors; a report with the diagnostics is still
   * returned.
   */
  CDS_STATUS_PARSE_ERROR = 3,
  CDS_STATUS_INVALID_ARGUMENT = 4,
  CDS_STATUS_IO = 5,
  CDS_STATUS_PANIC = 6,
} CdsStatus;

/**
 * Result of scanning one source.
 */
typedef struct CdsReport CdsReport;

/**
 * Scan settings.
 */
typedef struct CdsScanner CdsScanner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cds_last_error_message(void);

/**
 * Static, nul-terminated version string.
 */
const char *cds_version(void);

/**
 * New scanner with every rule enabled. Never null.
 */
struct CdsScanner *cds_scanner_new(void);

/**
 * # Safety
 * `scanner` must come from `cds_scanner_new` and not be used afterwards.
 */
void cds_scanner_free(struct CdsScanner *scanner);

/**
 * Enables exactly the comma-separated defect codes in `rules`, e.g.
 * `"MFS,CVS"`. An empty string disables all rules.
 *
 * # Safety
 * `scanner` must be live; `rules` a nul-terminated string.
 */
enum CdsStatus cds_scanner_set_rules(struct CdsScanner *scanner, const char *rules);

/**
 * Flags: `ior_distinct_sites`, `ior_respect_guards`,
 * `exclude_privilege_vars`, `unsupported_is_error`.
 *
 * # Safety
 * `scanner` must be live; `name` a nul-terminated string.
 */
enum CdsStatus cds_scanner_set_flag(struct CdsScanner *scanner, const char *name, bool value);

/**
 * Scans `source`, reporting it under `path` (may be null). On `Ok` and
 * `ParseError` `*out` receives a report the caller must free; otherwise it
 * is set to null.
 *
 * # Safety
 * `scanner` must be live, strings nul-terminated, `out` writable.
 */
enum CdsStatus cds_scan_source(const struct CdsScanner *scanner,
                               const char *path,
                               const char *source,
                               struct CdsReport **out);

/**
 * Reads and scans the file at `path`. Same ownership rules as
 * `cds_scan_source`.
 *
 * # Safety
 * `scanner` must be live, `path` nul-terminated, `out` writable.
 */
enum CdsStatus cds_scan_file(const struct CdsScanner *scanner,
                             const char *path,
                             struct CdsReport **out);

/**
 * # Safety
 * `report` must come from a scan call and not be used afterwards.
 */
void cds_report_free(struct CdsReport *report);

/**
 * Serializes the report as JSON into `*out`, to be released with
 * `cds_string_free`.
 *
 * # Safety
 * `report` must be live, `out` writable.
 */
enum CdsStatus cds_report_to_json(const struct CdsReport *report, char **out);

/**
 * Sets `*out` to whether any contract has an unsuppressed defect of
 * `code`, or of any kind when `code` is null.
 *
 * # Safety
 * `report` must be live, `out` writable, `code` null or nul-terminated.
 */
enum CdsStatus cds_report_has_defect(const struct CdsReport *report, const char *code, bool *out);

/**
 * Number of findings, suppressed ones included. Zero for null.
 *
 * # Safety
 * `report` must be null or live.
 */
size_t cds_report_finding_count(const struct CdsReport *report);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cds_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDSENTRY_H */
