#ifndef FIBER_ASYMPTOTICS_H
#define FIBER_ASYMPTOTICS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every entry point.
 */
typedef enum FaStatus {
  FA_STATUS_OK = 0,
  /**
   * Malformed input: bad JSON, unknown fixture, inconsistent dimensions.
   */
  FA_STATUS_INPUT_ERROR = 1,
  /**
   * Divergent integral, unsupported germ or failed numerics.
   */
  FA_STATUS_REFUSED = 2,
  /**
   * `fa_validate` ran but the relative gap exceeds the tolerance.
   */
  FA_STATUS_VALIDATION_FAILED = 3,
  FA_STATUS_NULL_POINTER = 4,
  FA_STATUS_INVALID_UTF8 = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  FA_STATUS_PANIC = 6,
} FaStatus;

/**
 * Opaque problem handle.
 */
typedef struct FaProblem FaProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a problem description (JSON, schema 1).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum FaStatus fa_problem_from_json(const char *json, struct FaProblem **out);

/**
 * Load a built-in fixture such as `"conical"` or `"quartic"`.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be writable.
 */
enum FaStatus fa_problem_from_fixture(const char *name, struct FaProblem **out);

/**
 * Release a handle; null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void fa_problem_free(struct FaProblem *p);

/**
 * The problem with defaults filled in, as JSON.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_problem_to_json(const struct FaProblem *p, char **out);

/**
 * Classification JSON. An Unsupported germ still yields the JSON, with status `Refused`.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_classify(const struct FaProblem *p, char **out);

/**
 * First `count` schedule entries as CSV `num,den,logpower`.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_schedule(const struct FaProblem *p, size_t count, char **out);

/**
 * Prediction JSON.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_predict(const struct FaProblem *p, char **out);

/**
 * Leading coefficient of the prediction.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_leading_coefficient(const struct FaProblem *p, double *out);

/**
 * Co-area density CSV `w,lvol`.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_coarea(const struct FaProblem *p, char **out);

/**
 * Comparison JSON from predict + oracle + fit; status `ValidationFailed` when the gap is too large.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum FaStatus fa_validate(const struct FaProblem *p, char **out);

/**
 * Copy of the calling thread's last error message, or null. Free with [`fa_string_free`].
 */
char *fa_last_error(void);

/**
 * Release a string produced by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void fa_string_free(char *s);

/**
 * Library version, static storage.
 */
const char *fa_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBER_ASYMPTOTICS_H */
