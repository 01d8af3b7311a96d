#ifndef HYDROSTAT_H
#define HYDROSTAT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Initial data choice for [`hs_pe_solve`].
#define HS_PRESET_DEFAULT 0

#define HS_PRESET_ZERO 1

#define HS_PRESET_RANDOM 2

// Result code of every call.
typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  // Non-finite values, invariant drift or a failed iteration.
  HS_STATUS_NUMERICAL = 3,
  HS_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  HS_STATUS_INTERNAL = 5,
} HsStatus;

// Layered `n_h × n_h × n_v` grid.
typedef struct HsGrid HsGrid;

// A stored primitive-equation trajectory.
typedef struct HsPeRun HsPeRun;

typedef struct HsRateFit {
  double slope;
  double intercept;
  double r2;
} HsRateFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static, NUL-terminated version string.
const char *hs_version(void);

// Copies the last error message of this thread into `buf` (NUL
// terminated, truncated to `len`) and returns the full message length
// without the terminator. `buf` may be null to query the length.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t hs_last_error_message(char *buf, size_t len);

// # Safety
// `out` must be valid for a pointer write.
enum HsStatus hs_grid_new(size_t n_h, size_t n_v, struct HsGrid **out);

// # Safety
// `grid` must be null or come from [`hs_grid_new`] and not be freed twice.
void hs_grid_free(struct HsGrid *grid);

// Number of grid points.
//
// # Safety
// `grid` must be a live handle, `out` valid for a write.
enum HsStatus hs_grid_len(const struct HsGrid *grid, size_t *out);

// Solves the primitive equations on `grid` up to `t_final` with step `dt`.
// `seed` and `amplitude` are used by [`HS_PRESET_RANDOM`] only.
//
// # Safety
// `grid` must be a live handle, `out` valid for a pointer write.
enum HsStatus hs_pe_solve(const struct HsGrid *grid,
                          uint32_t preset,
                          uint64_t seed,
                          double amplitude,
                          double t_final,
                          double dt,
                          struct HsPeRun **out);

// # Safety
// `run` must be null or come from [`hs_pe_solve`] and not be freed twice.
void hs_pe_free(struct HsPeRun *run);

// Number of stored states.
//
// # Safety
// `run` must be a live handle, `out` valid for a write.
enum HsStatus hs_pe_len(const struct HsPeRun *run, size_t *out);

// Time and grid sup of `|v|` and `|w|` of stored state `index`.
//
// # Safety
// `run` must be a live handle; the out pointers valid for writes.
enum HsStatus hs_pe_state_info(const struct HsPeRun *run,
                               size_t index,
                               double *time,
                               double *sup_v,
                               double *sup_w);

// Fujita–Kato total of the hydrostatic error at `eps` in `L∞_H L^q`,
// solving the scaled equations from the run's initial state with the
// run's step.
//
// # Safety
// `run` must be a live handle, `out` valid for a write.
enum HsStatus hs_difference_total(const struct HsPeRun *run, double eps, double q, double *out);

// Measured constant of the integral inequality `which` (1 to 4).
//
// # Safety
// `out` must be valid for a write.
enum HsStatus hs_prop22_ratio(uint32_t which,
                              double alpha,
                              double beta,
                              double eps,
                              double t,
                              double *out);

// `‖K_t‖_{L¹(T^d)}` by the trapezoid rule on `n` points per axis.
//
// # Safety
// `out` must be valid for a write.
enum HsStatus hs_heat_kernel_l1(double t, size_t d, size_t n, double *out);

// Least-squares fit of `ln value` against `ln eps` over `n` pairs.
//
// # Safety
// `eps` and `values` must be valid for `n` reads, `out` for a write.
enum HsStatus hs_fit_rate(const double *eps, const double *values, size_t n, struct HsRateFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDROSTAT_H */
