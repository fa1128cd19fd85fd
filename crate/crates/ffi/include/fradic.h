#ifndef FRADIC_H
#define FRADIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FradicActuatorKind {
  FRADIC_ACTUATOR_KIND_ZONE = 0,
  FRADIC_ACTUATOR_KIND_POINTWISE = 1,
} FradicActuatorKind;

/**
 * Result codes. The numeric values of `Ok`, `Error` and `NonIntegrable`
 * match the command-line exit codes.
 */
typedef enum FradicStatus {
  FRADIC_STATUS_OK = 0,
  FRADIC_STATUS_ERROR = 1,
  FRADIC_STATUS_NON_INTEGRABLE = 3,
  FRADIC_STATUS_INVALID_ARGUMENT = 4,
  FRADIC_STATUS_SINGULAR = 5,
  FRADIC_STATUS_NULL_POINTER = 6,
  FRADIC_STATUS_BUFFER_TOO_SMALL = 7,
  FRADIC_STATUS_PANIC = 8,
} FradicStatus;

/**
 * Opaque HUM solution.
 */
typedef struct FradicHumSolution FradicHumSolution;

/**
 * Opaque subregion.
 */
typedef struct FradicRegion FradicRegion;

/**
 * Opaque controlled system.
 */
typedef struct FradicSystem FradicSystem;

/**
 * Actuator description. `a1`, `a2` are used by zones, `sigma` by pointwise actuators.
 */
typedef struct FradicActuator {
  enum FradicActuatorKind kind;
  double a1;
  double a2;
  double sigma;
  double gain;
} FradicActuator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length, 0 when there is none.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t fradic_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fradic_version(void);

/**
 * `E_{α,β}(z)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FradicStatus fradic_mittag_leffler(double alpha, double beta, double z, double *out);

/**
 * Creates a system on `[0, 1]` with `n_modes` Dirichlet modes and zero initial state.
 *
 * # Safety
 * `acts` must point to `n_acts` actuators; `out` must be a valid pointer.
 */
enum FradicStatus fradic_system_new(double alpha,
                                    double horizon,
                                    size_t n_modes,
                                    const struct FradicActuator *acts,
                                    size_t n_acts,
                                    struct FradicSystem **out);

/**
 * Sets the initial state's modal coefficients. `weighted_rl != 0` selects the
 * weighted Riemann–Liouville initial condition, otherwise the classical limit.
 *
 * # Safety
 * `sys` must come from [`fradic_system_new`]; `z0` must point to `n` doubles.
 */
enum FradicStatus fradic_system_set_initial(struct FradicSystem *sys,
                                            const double *z0,
                                            size_t n,
                                            int weighted_rl);

/**
 * # Safety
 * `sys` must come from [`fradic_system_new`] or be null.
 */
void fradic_system_free(struct FradicSystem *sys);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum FradicStatus fradic_region_new(double lo, double hi, struct FradicRegion **out);

/**
 * # Safety
 * `region` must come from [`fradic_region_new`] or be null.
 */
void fradic_region_free(struct FradicRegion *region);

/**
 * Rank test on the first `levels` Dirichlet modes of `[0, 1]`. Writes
 * `strategic` (0/1) and up to `cap` failed levels (1-based); `n_failed`
 * receives the total number of failures.
 *
 * # Safety
 * Pointers must be valid; `failed` must hold `cap` entries or be null when `cap = 0`.
 */
enum FradicStatus fradic_strategic_test(const struct FradicActuator *acts,
                                        size_t n_acts,
                                        size_t levels,
                                        int *strategic,
                                        size_t *failed,
                                        size_t cap,
                                        size_t *n_failed);

/**
 * Regional Gramian summary. `n_omega = 0` selects the default region dimension.
 *
 * # Safety
 * Handles must be live; output pointers must be valid.
 */
enum FradicStatus fradic_gramian(const struct FradicSystem *sys,
                                 const struct FradicRegion *region,
                                 size_t n_omega,
                                 double *smallest_eigenvalue,
                                 int *positive_definite,
                                 size_t *n_omega_used);

/**
 * HUM solve toward the modal target `target[0..n]` (restricted to the region).
 * `epsilon < 0` selects the default regularisation; `n_omega = 0` the default dimension.
 *
 * # Safety
 * Handles must be live; `target` must hold `n` doubles; `out` must be valid.
 */
enum FradicStatus fradic_hum_solve(const struct FradicSystem *sys,
                                   const struct FradicRegion *region,
                                   const double *target,
                                   size_t n,
                                   double epsilon,
                                   size_t n_omega,
                                   struct FradicHumSolution **out);

/**
 * Energy, residual, relative residual and convergence flag of a solution.
 *
 * # Safety
 * `sol` must be live; output pointers must be valid.
 */
enum FradicStatus fradic_hum_summary(const struct FradicHumSolution *sol,
                                     double *energy,
                                     double *residual,
                                     double *relative_residual,
                                     int *converged);

/**
 * Control samples: `times[cap]` and row-major `values[cap × channels]`.
 * `n_samples` and `n_channels` are always written; `BufferTooSmall` is
 * returned when `cap` is smaller than the sample count.
 *
 * # Safety
 * `sol` must be live; buffers must hold the stated sizes.
 */
enum FradicStatus fradic_hum_control(const struct FradicHumSolution *sol,
                                     double *times,
                                     double *values,
                                     size_t cap,
                                     size_t *n_samples,
                                     size_t *n_channels);

/**
 * # Safety
 * `sol` must come from [`fradic_hum_solve`] or be null.
 */
void fradic_hum_free(struct FradicHumSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRADIC_H */
