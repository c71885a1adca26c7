#ifndef BRJUNO_H
#define BRJUNO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call. Zero is success.
typedef enum BrjunoStatus {
  BRJUNO_STATUS_OK = 0,
  // Argument outside the mathematical domain.
  BRJUNO_STATUS_DOMAIN = 1,
  // A rational where an irrational is required.
  BRJUNO_STATUS_RATIONAL_INPUT = 2,
  // Partial quotient index past the end of a finite expansion.
  BRJUNO_STATUS_EXHAUSTED = 3,
  // Precision, depth or evaluation budget exhausted.
  BRJUNO_STATUS_RESOURCE = 4,
  // A fit had too few usable scales.
  BRJUNO_STATUS_ESTIMATION = 5,
  // Malformed number text.
  BRJUNO_STATUS_PARSE = 6,
  // A required pointer argument was null.
  BRJUNO_STATUS_NULL_POINTER = 7,
  // A value does not fit the C output type.
  BRJUNO_STATUS_OVERFLOW = 8,
  // Internal failure; the library state is unaffected.
  BRJUNO_STATUS_PANIC = 9,
} BrjunoStatus;

// Opaque number handle. Create with [`brjuno_number_parse`], release with
// [`brjuno_number_free`].
typedef struct BrjunoNumber BrjunoNumber;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on this thread.
const char *brjuno_last_error(void);

// Library version as a static NUL-terminated string.
const char *brjuno_version(void);

// Parses `text` into a new handle stored in `*out`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum BrjunoStatus brjuno_number_parse(const char *text, struct BrjunoNumber **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `n` must come from [`brjuno_number_parse`] and not be used afterwards.
void brjuno_number_free(struct BrjunoNumber *n);

// Whether the handle holds a rational. Writes 1 or 0.
//
// # Safety
// `n` must be a live handle and `out` a valid pointer.
enum BrjunoStatus brjuno_number_is_rational(const struct BrjunoNumber *n, int32_t *out);

// Partial quotient `a_index` (1-based) of the fractional part.
//
// # Safety
// `n` must be a live handle and `out` a valid pointer.
enum BrjunoStatus brjuno_number_quotient(const struct BrjunoNumber *n, size_t index, uint64_t *out);

// `B(x)` of an irrational handle to absolute accuracy `tol`. `tail_bound`
// may be null.
//
// # Safety
// `n` must be a live handle; `value` must be valid.
enum BrjunoStatus brjuno_eval_b(const struct BrjunoNumber *n,
                                double tol,
                                double *value,
                                double *tail_bound);

// Residual of the functional equation at an irrational handle.
//
// # Safety
// `n` must be a live handle and `residual` a valid pointer.
enum BrjunoStatus brjuno_functional_residual(const struct BrjunoNumber *n,
                                             double tol,
                                             double *residual);

// Exact finite sum `B̃(p/q)` for `0 < p/q < 1`.
//
// # Safety
// `value` must be a valid pointer.
enum BrjunoStatus brjuno_eval_btilde(uint64_t p, uint64_t q, double *value);

// `∫_lo^hi B` to tolerance `tol`. `error_estimate` and `converged` may be
// null. `converged` is set to 0 when the evaluation budget ran out first;
// the call still succeeds and `error_estimate` is then above `tol`.
//
// # Safety
// `value` must be a valid pointer.
enum BrjunoStatus brjuno_integrate_b(double lo,
                                     double hi,
                                     double tol,
                                     double *value,
                                     double *error_estimate,
                                     int32_t *converged);

// Haar wavelet coefficient of `B` at scale `a` and position `p/q`.
// `error_estimate` may be null.
//
// # Safety
// `value` must be a valid pointer.
enum BrjunoStatus brjuno_haar_cwt(double a,
                                  uint64_t p,
                                  uint64_t q,
                                  double *value,
                                  double *error_estimate);

// Log-log slope of the p-oscillation over radii `2^-jmin … 2^-jmax`.
// `r_squared` may be null.
//
// # Safety
// `n` must be a live handle and `slope` a valid pointer.
enum BrjunoStatus brjuno_p_exponent(const struct BrjunoNumber *n,
                                    double p,
                                    int32_t jmin,
                                    int32_t jmax,
                                    double *slope,
                                    double *r_squared);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRJUNO_H */
