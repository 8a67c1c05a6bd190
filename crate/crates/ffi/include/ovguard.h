#ifndef OVGUARD_H
#define OVGUARD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  OVG_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  OVG_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  OVG_STATUS_INVALID_UTF8 = 2,
  /**
   * The C source did not parse.
   */
  OVG_STATUS_PARSE = 3,
  /**
   * The configured solver could not be run.
   */
  OVG_STATUS_SOLVER_UNAVAILABLE = 4,
  /**
   * The configuration text was rejected.
   */
  OVG_STATUS_CONFIG = 5,
  /**
   * Analysis failed for another reason.
   */
  OVG_STATUS_ANALYSIS = 6,
  /**
   * Repair generation or insertion failed.
   */
  OVG_STATUS_REPAIR = 7,
  /**
   * An index was past the end of a list.
   */
  OVG_STATUS_OUT_OF_RANGE = 8,
  /**
   * An internal panic was caught at the boundary.
   */
  OVG_STATUS_PANIC = 9,
} OvgStatus;

/**
 * Detection result for one source text.
 */
typedef struct OvgAnalysis OvgAnalysis;

/**
 * Settings shared by analyses and repairs.
 */
typedef struct OvgSession OvgSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *ovg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ovg_version(void);

/**
 * Create a session. `config_toml` may be null for the defaults; relative
 * paths inside it resolve against the current directory.
 *
 * # Safety
 * `config_toml` is null or a NUL-terminated string; `out` is writable.
 */
OvgStatus ovg_session_new(const char *config_toml, OvgSession **out);

/**
 * # Safety
 * `session` is null or was returned by `ovg_session_new` and not yet freed.
 */
void ovg_session_free(OvgSession *session);

/**
 * Analyze `source`, reported under the name `file`.
 *
 * # Safety
 * `session` is a live session; `source` and `file` are NUL-terminated;
 * `out` is writable.
 */
OvgStatus ovg_analyze(const OvgSession *session,
                      const char *source,
                      const char *file,
                      OvgAnalysis **out);

/**
 * # Safety
 * `analysis` is null or was returned by `ovg_analyze` and not yet freed.
 */
void ovg_analysis_free(OvgAnalysis *analysis);

/**
 * Number of reports, or 0 for a null handle.
 *
 * # Safety
 * `analysis` is null or a live analysis.
 */
size_t ovg_analysis_report_count(const OvgAnalysis *analysis);

/**
 * Source line of report `index`.
 *
 * # Safety
 * `analysis` is a live analysis; `line` is writable.
 */
OvgStatus ovg_analysis_report_line(const OvgAnalysis *analysis, size_t index, uint32_t *line);

/**
 * All reports as a JSON array.
 *
 * # Safety
 * `analysis` is a live analysis; `out` is writable.
 */
OvgStatus ovg_analysis_reports_json(const OvgAnalysis *analysis, char **out);

/**
 * Repair attempts for every report as a JSON array; each element carries
 * either a candidate or the reason none was produced.
 *
 * # Safety
 * `session` and `analysis` are live handles; `out` is writable.
 */
OvgStatus ovg_repair_json(const OvgSession *session, const OvgAnalysis *analysis, char **out);

/**
 * Apply every repair candidate to the analyzed source and re-analyze the
 * result. `patched` receives the repaired text; `applied` and
 * `revalidated` receive the candidate counts.
 *
 * # Safety
 * `session` and `analysis` are live handles; the out-parameters are
 * writable.
 */
OvgStatus ovg_repair_apply_all(const OvgSession *session,
                               const OvgAnalysis *analysis,
                               char **patched,
                               size_t *applied,
                               size_t *revalidated);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` is null or was returned by this library and not yet freed.
 */
void ovg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OVGUARD_H */
