#ifndef DSFC_H
#define DSFC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DsfcStatus {
  DSFC_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DSFC_ERR_NULL = 1,
  /**
   * Malformed configuration, gains or argument.
   */
  DSFC_ERR_CONFIG = 2,
  DSFC_ERR_DIMENSION = 3,
  DSFC_ERR_INFEASIBLE = 4,
  DSFC_ERR_SOLVER = 5,
  DSFC_ERR_IO = 6,
  /**
   * Output buffer too small.
   */
  DSFC_ERR_BUFFER = 7,
  DSFC_ERR_NUMERIC = 8,
  DSFC_ERR_PANIC = 9,
} DsfcStatus;

/**
 * Controller gains, optionally with γ and a certificate.
 */
typedef struct DsfcGains DsfcGains;

/**
 * Plant, basis, supply rate and algorithm settings.
 */
typedef struct DsfcProblem DsfcProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call into this library from the same thread.
 */
const char *dsfc_last_error(void);

/**
 * Library version as a static string.
 */
const char *dsfc_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed before.
 */
void dsfc_string_free(char *s);

/**
 * Builds a problem from a JSON run configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsfcStatus dsfc_problem_from_json(const char *json, struct DsfcProblem **out);

/**
 * Builds a problem from a JSON run configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsfcStatus dsfc_problem_from_file(const char *path, struct DsfcProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from this library not yet freed.
 */
void dsfc_problem_free(struct DsfcProblem *problem);

/**
 * State, input, disturbance, output and basis dimensions. Any output
 * pointer may be null.
 *
 * # Safety
 * `problem` must be a live handle; non-null outputs must be valid.
 */
enum DsfcStatus dsfc_problem_dims(const struct DsfcProblem *problem,
                                  size_t *n,
                                  size_t *p,
                                  size_t *q,
                                  size_t *m,
                                  size_t *d);

/**
 * Predictor-based starting gains (no γ, no certificate).
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum DsfcStatus dsfc_predictor_seed(const struct DsfcProblem *problem, struct DsfcGains **out);

/**
 * Full synthesis. `max_iter < 0` keeps the configured iteration cap.
 * The solver backend follows `DSFC_SDP_BACKEND`.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum DsfcStatus dsfc_synthesize(const struct DsfcProblem *problem,
                                int64_t max_iter,
                                struct DsfcGains **out);

/**
 * Reads gains in the JSON format written by `dsfc synthesize`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsfcStatus dsfc_gains_from_json(const char *json, struct DsfcGains **out);

/**
 * Serializes gains to JSON; release the result with [`dsfc_string_free`].
 *
 * # Safety
 * `gains` must be a live handle and `out` a valid pointer.
 */
enum DsfcStatus dsfc_gains_to_json(const struct DsfcGains *gains, char **out);

/**
 * # Safety
 * `gains` must be null or a handle from this library not yet freed.
 */
void dsfc_gains_free(struct DsfcGains *gains);

/**
 * Certified γ, or NaN when the gains carry none.
 *
 * # Safety
 * `gains` must be a live handle and `gamma` a valid pointer.
 */
enum DsfcStatus dsfc_gains_gamma(const struct DsfcGains *gains, double *gamma);

/**
 * Rows and columns of the stacked gain `[K1 K2 K3]`.
 *
 * # Safety
 * `gains` must be a live handle; `rows` and `cols` valid pointers.
 */
enum DsfcStatus dsfc_gains_shape(const struct DsfcGains *gains, size_t *rows, size_t *cols);

/**
 * Copies `[K1 K2 K3]` row-major into `buf` of `len` doubles.
 *
 * # Safety
 * `gains` must be a live handle and `buf` valid for `len` writes.
 */
enum DsfcStatus dsfc_gains_copy(const struct DsfcGains *gains, double *buf, size_t len);

/**
 * Rightmost characteristic root of the closed loop over the configured
 * discretization sizes.
 *
 * # Safety
 * Handles must be live; `abscissa` valid; `converged` may be null.
 */
enum DsfcStatus dsfc_spectral_abscissa(const struct DsfcProblem *problem,
                                       const struct DsfcGains *gains,
                                       double *abscissa,
                                       int *converged);

/**
 * Spectrum, dissipation and L2 checks. A certificate is computed by a
 * fixed-gain solve when the gains carry none. `report` (may be null)
 * receives the JSON report.
 *
 * # Safety
 * Handles must be live; `passed` valid; `report` null or valid.
 */
enum DsfcStatus dsfc_verify(const struct DsfcProblem *problem,
                            const struct DsfcGains *gains,
                            uint64_t seed,
                            int *passed,
                            char **report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSFC_H */
