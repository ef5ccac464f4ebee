#ifndef CHANDISC_H
#define CHANDISC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChandiscStatus {
  CHANDISC_STATUS_OK = 0,
  CHANDISC_STATUS_NULL_POINTER = 1,
  CHANDISC_STATUS_PARSE = 2,
  CHANDISC_STATUS_SOLVER = 3,
  CHANDISC_STATUS_SIZE_CAP = 4,
  CHANDISC_STATUS_INVALID = 5,
  CHANDISC_STATUS_VERIFY_FAILED = 6,
  CHANDISC_STATUS_MISSING = 7,
  CHANDISC_STATUS_PANIC = 8,
} ChandiscStatus;

/**
 * Parsed run configuration.
 */
typedef struct ChandiscConfig ChandiscConfig;

/**
 * Channel ensemble.
 */
typedef struct ChandiscEnsemble ChandiscEnsemble;

/**
 * Bound report produced by [`chandisc_run`] or parsed from JSON.
 */
typedef struct ChandiscReport ChandiscReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * call into the library from the same thread.
 */
const char *chandisc_last_error(void);

/**
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_config_parse(const char *toml, struct ChandiscConfig **out);

/**
 * # Safety
 * `cfg` must come from [`chandisc_config_parse`] and not be used afterwards.
 */
void chandisc_config_free(struct ChandiscConfig *cfg);

/**
 * Solves the configured scenario. `workers = 0` uses all cores; the seed
 * overrides the config when `has_seed` is true. Subtask failures are kept
 * in the report and reflected in the returned status.
 *
 * # Safety
 * `cfg` must be a live config handle and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_run(const struct ChandiscConfig *cfg,
                                 size_t workers,
                                 bool has_seed,
                                 uint64_t seed,
                                 struct ChandiscReport **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_report_from_json(const char *json, struct ChandiscReport **out);

/**
 * Serialised report; release with [`chandisc_string_free`].
 *
 * # Safety
 * `report` must be a live report handle and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_report_to_json(const struct ChandiscReport *report, char **out);

/**
 * # Safety
 * `report` must be a live report handle and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_report_lower(const struct ChandiscReport *report, double *out);

/**
 * # Safety
 * `report` must be a live report handle and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_report_upper(const struct ChandiscReport *report, double *out);

/**
 * Re-checks the stored certificates; `VerifyFailed` names the first
 * failing check in [`chandisc_last_error`].
 *
 * # Safety
 * `report` must be a live report handle.
 */
enum ChandiscStatus chandisc_report_verify(const struct ChandiscReport *report);

/**
 * # Safety
 * `report` must be a report handle not used afterwards.
 */
void chandisc_report_free(struct ChandiscReport *report);

/**
 * # Safety
 * `s` must be a string returned by this library and not used afterwards.
 */
void chandisc_string_free(char *s);

/**
 * Named ensemble, e.g. `"clock_shift:3"`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_ensemble_preset(const char *name, struct ChandiscEnsemble **out);

/**
 * # Safety
 * `e` must be a live ensemble handle.
 */
size_t chandisc_ensemble_len(const struct ChandiscEnsemble *e);

/**
 * Optimal success probability over single-copy testers with unlimited
 * memory.
 *
 * # Safety
 * `e` must be a live ensemble handle and `out` a valid pointer.
 */
enum ChandiscStatus chandisc_optimal_single_copy(const struct ChandiscEnsemble *e, double *out);

/**
 * # Safety
 * `e` must be an ensemble handle not used afterwards.
 */
void chandisc_ensemble_free(struct ChandiscEnsemble *e);

/**
 * `min{1, d_E/d}`; negative for `d < 2`.
 */
double chandisc_oracle_clock_shift(size_t d, size_t d_e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHANDISC_H */
