#ifndef NEARISO_H
#define NEARISO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define NI_FAMILY_NORMAL 0

#define NI_FAMILY_BINOMIAL 1

#define NI_FAMILY_POISSON 2

#define NI_FAMILY_GAMMA 3

// Chi-square with `shape` degrees of freedom.
#define NI_FAMILY_CHISQ 4

#define NI_INCREASING 0

#define NI_DECREASING 1

// Family default: per-trial for binomial, natural otherwise.
#define NI_SCALE_DEFAULT -1

#define NI_SCALE_NATURAL 0

#define NI_SCALE_MEAN_WEIGHT 1

#define NI_CRITERION_AIC 0

#define NI_CRITERION_CP 1

typedef enum NiStatus {
  NI_OK = 0,
  NI_NULL_POINTER = 1,
  NI_INVALID_ARGUMENT = 2,
  NI_EMPTY_INPUT = 3,
  NI_DOMAIN = 4,
  NI_SUPPORT = 5,
  NI_NONPOSITIVE_WEIGHT = 6,
  NI_LENGTH_MISMATCH = 7,
  NI_INVALID_BOUNDS = 8,
  NI_NONCONVERGENCE = 9,
  NI_BUFFER_TOO_SMALL = 10,
  NI_INTERNAL = 11,
} NiStatus;

// Opaque fitted solution path.
typedef struct NiModel NiModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message on this thread, or null. Owned by the library and valid
// until the next failing call on the same thread.
const char *ni_last_error(void);

// Library version as a static NUL-terminated string.
const char *ni_version(void);

// Solves the full path. `weights` may be null, meaning the family default
// (trials for binomial, shape for gamma, half the degrees of freedom for
// chi-square, one otherwise).
//
// # Safety
// `data` (and `weights` when non-null) must point to `n` doubles; `out` must
// be a valid pointer.
enum NiStatus ni_model_new(const double *data,
                           const double *weights,
                           size_t n,
                           int32_t family_kind,
                           double shape,
                           int32_t direction,
                           int32_t penalty_scale,
                           struct NiModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from [`ni_model_new`] and not be used afterwards.
void ni_model_free(struct NiModel *model);

// Number of observations.
//
// # Safety
// `model` must be a live model or null (which yields 0).
size_t ni_model_len(const struct NiModel *model);

// Number of knots, including the leading zero.
//
// # Safety
// `model` must be a live model or null (which yields 0).
size_t ni_model_knot_count(const struct NiModel *model);

// Copies the knots in increasing order.
//
// # Safety
// `out` must hold `cap` doubles.
enum NiStatus ni_model_knots(const struct NiModel *model, double *out, size_t cap);

// Fit at `lambda`. `theta` and `pieces` may be null.
//
// # Safety
// `eta` (and `theta` when non-null) must hold `cap` doubles.
enum NiStatus ni_model_fit(const struct NiModel *model,
                           double lambda,
                           double *eta,
                           double *theta,
                           size_t cap,
                           size_t *pieces);

// Fit at `lambda` with the natural parameter confined to `[lower, upper]`.
//
// # Safety
// As for [`ni_model_fit`].
enum NiStatus ni_model_fit_bounded(const struct NiModel *model,
                                   double lambda,
                                   double lower,
                                   double upper,
                                   double *eta,
                                   double *theta,
                                   size_t cap,
                                   size_t *pieces);

// Selects a knot by AIC or Cp (`sigma2` is ignored for AIC). Writes the
// selected lambda and, when non-null, its knot index and criterion value.
//
// # Safety
// `lambda` must be valid; the other outputs may be null.
enum NiStatus ni_model_select(const struct NiModel *model,
                              int32_t criterion,
                              double sigma2,
                              double *lambda,
                              size_t *knot,
                              double *value);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NEARISO_H */
