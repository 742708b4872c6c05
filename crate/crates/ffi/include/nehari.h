#ifndef NEHARI_H
#define NEHARI_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NehariCode {
  NEHARI_CODE_OK = 0,
  NEHARI_CODE_NULL_POINTER = 1,
  NEHARI_CODE_INVALID_ARGUMENT = 2,
  NEHARI_CODE_PARSE = 3,
  NEHARI_CODE_PRECONDITION = 4,
  NEHARI_CODE_NUMERICAL = 5,
  NEHARI_CODE_BUFFER_TOO_SMALL = 6,
  NEHARI_CODE_NO_SOLUTION = 7,
  NEHARI_CODE_PANIC = 8,
} NehariCode;

typedef enum NehariSolveStatus {
  NEHARI_SOLVE_STATUS_CONVERGED = 0,
  NEHARI_SOLVE_STATUS_GAP_POSITIVE = 1,
  NEHARI_SOLVE_STATUS_PRECONDITION_FAILED = 2,
  NEHARI_SOLVE_STATUS_MAX_ITERATIONS = 3,
} NehariSolveStatus;

/**
 * Opaque instance handle.
 */
typedef struct NehariInstance NehariInstance;

/**
 * Opaque solve result handle.
 */
typedef struct NehariResult NehariResult;

/**
 * Solver overrides. Non-positive values keep the defaults.
 */
typedef struct NehariOptions {
  double delta;
  double tol;
  size_t max_iter;
} NehariOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON instance document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NehariCode nehari_instance_from_json(const char *json, struct NehariInstance **out);

/**
 * Builds an instance from `support` blocks of size `dim x dim`, stored
 * block after block, each row-major. `im` may be null for real data.
 *
 * # Safety
 * `re` (and `im` when non-null) must hold `support * dim * dim` values;
 * `out` must be a valid pointer.
 */
enum NehariCode nehari_instance_from_coefficients(size_t dim,
                                                  size_t support,
                                                  const double *re,
                                                  const double *im,
                                                  struct NehariInstance **out);

/**
 * Block dimension `m`, or 0 for a null handle.
 *
 * # Safety
 * `instance` must be null or a live handle.
 */
size_t nehari_instance_dim(const struct NehariInstance *instance);

/**
 * # Safety
 * `instance` must be null or a handle not yet freed.
 */
void nehari_instance_free(struct NehariInstance *instance);

/**
 * Solves for the minimal bound. A result handle is produced whenever the
 * solver ran, including non-converged runs; inspect
 * [`nehari_result_status`]. `options` may be null.
 *
 * # Safety
 * `instance` must be a live handle, `options` null or valid, `out` valid.
 */
enum NehariCode nehari_solve(const struct NehariInstance *instance,
                             const struct NehariOptions *options,
                             struct NehariResult **out);

/**
 * # Safety
 * `result` must be a live handle.
 */
enum NehariSolveStatus nehari_result_status(const struct NehariResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
size_t nehari_result_iterations(const struct NehariResult *result);

/**
 * Fixed-point residual of the certificate, or NaN when there is none.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double nehari_result_residual(const struct NehariResult *result);

/**
 * Copies rho^2_min row-major into `re`/`im` (each of length `len`, at
 * least `m * m`). `im` may be null.
 *
 * # Safety
 * `result` must be a live handle; buffers must hold `len` values.
 */
enum NehariCode nehari_result_rho_sq(const struct NehariResult *result,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void nehari_result_free(struct NehariResult *result);

/**
 * Decides whether the bound `rho` (the bound itself, not its square;
 * Hermitian, `m x m`, row-major) is
 * feasible. Writes 1 or 0 to `feasible` and the eigenvalue margin to
 * `margin` (may be null).
 *
 * # Safety
 * `instance` must be a live handle; `rho_re` (and `rho_im` when non-null)
 * must hold `m * m` values; `feasible` must be valid.
 */
enum NehariCode nehari_check(const struct NehariInstance *instance,
                             const double *rho_re,
                             const double *rho_im,
                             int *feasible,
                             double *margin);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from the same thread.
 */
const char *nehari_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nehari_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEHARI_H */
