#ifndef BTBS_H
#define BTBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define BTBS_FAMILY_BTBS 0

#define BTBS_FAMILY_KS 1

#define BTBS_FAMILY_BS 2

// Parameters: `theta[0..d]`.
#define BTBS_DATA_COSINE 0

// Parameters: `center[0..d]`, then `width`.
#define BTBS_DATA_GAUSSIAN 1

// Parameters: `c`.
#define BTBS_DATA_CONSTANT 2

#define BTBS_SYSTEM_BTBS_LIN 0

#define BTBS_SYSTEM_BTBS_NONLIN 1

#define BTBS_SYSTEM_BS_LIN 2

#define BTBS_SYSTEM_BS_NONLIN 3

#define BTBS_SYSTEM_KS 4

#define BTBS_ROUTE_ANALYTIC 0

#define BTBS_ROUTE_EIGEN 1

#define BTBS_ROUTE_FD 2

// Result code of every call.
typedef enum BtbsStatus {
  BTBS_STATUS_OK = 0,
  BTBS_STATUS_INVALID_ARGUMENT = 1,
  BTBS_STATUS_NULL_POINTER = 2,
  // Quadrature refinement did not reach its tolerance.
  BTBS_STATUS_ACCURACY = 3,
  // Input outside the domain of the requested quantity.
  BTBS_STATUS_DOMAIN = 4,
  BTBS_STATUS_INTERNAL = 5,
} BtbsStatus;

// Opaque handle.
typedef struct BtbsLab BtbsLab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a lab; returns null on invalid input (see `btbs_last_error`).
//
// # Safety
// `params` must point to `n_params` readable doubles.
struct BtbsLab *btbs_lab_new(uint32_t family,
                             uintptr_t n,
                             uintptr_t d,
                             uint32_t data_kind,
                             const double *params,
                             uintptr_t n_params);

// # Safety
// `lab` must come from `btbs_lab_new` and not be used afterwards; null is ignored.
void btbs_lab_free(struct BtbsLab *lab);

// Quadrature value of a field moment at an interior `t`. `order = 0` selects
// the adaptive scheme; otherwise a fixed order checked against half of it.
//
// # Safety
// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
enum BtbsStatus btbs_quad_moment(const struct BtbsLab *lab,
                                 uint32_t p,
                                 int32_t j,
                                 const double *t,
                                 const double *x,
                                 uint32_t order,
                                 double *out_re,
                                 double *out_im,
                                 double *out_err);

// Monte Carlo estimate of a BTBS field moment (`p` in {0, 2}).
//
// # Safety
// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
enum BtbsStatus btbs_mc_moment(const struct BtbsLab *lab,
                               uint32_t p,
                               int32_t j,
                               const double *t,
                               const double *x,
                               uint64_t n_samples,
                               uint64_t seed,
                               uint64_t stream_id,
                               uint32_t workers,
                               double *out_value,
                               double *out_stderr);

// Residual of one PDE at `(t, x)` with the default stencil. `j` is required by
// the indexed systems (linear BTBS, linear BS, KS).
//
// # Safety
// `t` and `x` must hold `n` and `d` doubles; output pointers may be null.
enum BtbsStatus btbs_residual(const struct BtbsLab *lab,
                              uint32_t system,
                              int32_t j,
                              const double *t,
                              const double *x,
                              uint32_t route,
                              double *out_rel,
                              double *out_abs);

// Message of the last failed call on this thread (empty after a success).
// Valid until the next call on the same thread.
const char *btbs_last_error(void);

// Library version as a static NUL-terminated string.
const char *btbs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BTBS_H */
