#ifndef QUADHULL_H
#define QUADHULL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum QhStatus {
  QH_STATUS_OK = 0,
  QH_STATUS_NULL_POINTER = 1,
  /**
   * Malformed JSON or non-UTF-8 input.
   */
  QH_STATUS_PARSE = 2,
  /**
   * Well-formed input that is not a valid problem.
   */
  QH_STATUS_VALIDATION = 3,
  /**
   * The solver or a factorization failed.
   */
  QH_STATUS_NUMERICAL = 4,
  /**
   * A buffer length does not match the problem.
   */
  QH_STATUS_DIMENSION = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  QH_STATUS_PANIC = 6,
} QhStatus;

/**
 * Outcome of a support query.
 */
typedef enum QhSupportStatus {
  QH_SUPPORT_STATUS_OPTIMAL = 0,
  QH_SUPPORT_STATUS_UNBOUNDED = 1,
  QH_SUPPORT_STATUS_INFEASIBLE = 2,
} QhSupportStatus;

/**
 * Parsed problem.
 */
typedef struct QhProblem QhProblem;

/**
 * Spectrahedral shadow built from a problem.
 */
typedef struct QhShadow QhShadow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qh_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t qh_last_error(char *buf, size_t len);

/**
 * Parses a JSON problem document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QhStatus qh_problem_from_json(const char *json, struct QhProblem **out);

/**
 * # Safety
 * `p` must be null or a handle from [`qh_problem_from_json`] not yet freed.
 */
void qh_problem_free(struct QhProblem *p);

/**
 * Parameter dimension `n` and output dimension `m`.
 *
 * # Safety
 * `p` must be a live problem handle; `n` and `m` valid pointers.
 */
enum QhStatus qh_problem_dims(const struct QhProblem *p, size_t *n, size_t *m);

/**
 * Relaxation condition for two-constraint and rational problems. `holds`
 * receives 1 or 0 (1 for single-constraint problems, which need none) and
 * `margin` the best `λ_max` found (NaN when not applicable).
 *
 * # Safety
 * `p` must be a live problem handle; `holds` and `margin` valid pointers.
 */
enum QhStatus qh_problem_condition(const struct QhProblem *p, int *holds, double *margin);

/**
 * Builds the shadow of a problem.
 *
 * # Safety
 * `p` must be a live problem handle and `out` a valid pointer.
 */
enum QhStatus qh_shadow_build(const struct QhProblem *p, struct QhShadow **out);

/**
 * # Safety
 * `s` must be null or a handle from [`qh_shadow_build`] not yet freed.
 */
void qh_shadow_free(struct QhShadow *s);

/**
 * Side length of the lifted PSD variable.
 *
 * # Safety
 * `s` must be a live shadow handle and `out` a valid pointer.
 */
enum QhStatus qh_shadow_lift_dim(const struct QhShadow *s, size_t *out);

/**
 * Support value `max` (`maximize != 0`) or `min` of `ℓᵀy` over the shadow.
 * `value` is `±∞` when unbounded or empty. When `point` is non-null it
 * receives the optimal image (`len` entries) for optimal results.
 *
 * # Safety
 * `ell` and `point` (if non-null) must hold `len` doubles; `status` and
 * `value` must be valid pointers.
 */
enum QhStatus qh_support(const struct QhShadow *s,
                         const double *ell,
                         size_t len,
                         int maximize,
                         enum QhSupportStatus *status,
                         double *value,
                         double *point);

/**
 * Membership of `y` (`len` entries). `inside` receives 1 or 0 and
 * `distance` the L1 distance to the image of the shadow. When the point is
 * outside and `ell` is non-null, `ell` (`len` entries) and `ell0` receive a
 * separating inequality `ellᵀy' ≥ ell0` valid on the shadow.
 *
 * # Safety
 * Buffers must hold `len` doubles; scalar outputs must be valid or null
 * where documented.
 */
enum QhStatus qh_membership(const struct QhShadow *s,
                            const double *y,
                            size_t len,
                            int *inside,
                            double *distance,
                            double *ell,
                            double *ell0);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUADHULL_H */
