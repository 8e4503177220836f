#ifndef PHASEMETER_H
#define PHASEMETER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define PM_OK 0

/**
 * Invalid input: bad parameter, mismatched axes, malformed data.
 */
#define PM_VALIDATION 1

/**
 * The grid or truncation is too small for the requested accuracy.
 */
#define PM_NUMERICAL 2

#define PM_IO 3

/**
 * A required pointer argument was null.
 */
#define PM_NULL 4

#define PM_PANIC 5

#define PM_PROFILE_DEFAULT 0

#define PM_PROFILE_FINE 1

#define PM_RETRODICTIVE 0

#define PM_PREDICTIVE 1

#define PM_VERDICT_EQUAL 0

#define PM_VERDICT_MOMENTS_ONLY 1

#define PM_VERDICT_UNEQUAL 2

/**
 * Sampled phase-space distribution.
 */
typedef struct PmGrid PmGrid;

/**
 * Configured two-pointer measurement.
 */
typedef struct PmProcess PmProcess;

/**
 * Truncated number-basis state.
 */
typedef struct PmState PmState;

/**
 * Worst-case error summary for one regime.
 */
typedef struct {
  double delta_x;
  double delta_p;
  double product;
  double bias_x;
  double bias_p;
  double resolution_lambda;
} PmErrorSummary;

/**
 * Result of the measure-equality oracle.
 */
typedef struct {
  /**
   * One of the `PM_VERDICT_*` codes.
   */
  int32_t verdict;
  double moment_distance;
  double characteristic_distance;
  double l1_distance;
} PmComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 if the last call succeeded. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t pm_last_error_message(char *buf, uintptr_t len);

/**
 * Number state `|n>` in a space of dimension `dim` at length scale `lambda`.
 *
 * # Safety
 * `out` must be a valid pointer to a writable handle slot.
 */
int32_t pm_state_number(uintptr_t n, uintptr_t dim, double lambda, PmState **out);

/**
 * State from `dim` amplitudes given as separate real and imaginary arrays,
 * normalised on the way in. Zero or non-finite input is rejected.
 *
 * # Safety
 * `re` and `im` must each point to `dim` readable doubles.
 */
int32_t pm_state_from_amplitudes(const double *re,
                                 const double *im,
                                 uintptr_t dim,
                                 double lambda,
                                 PmState **out);

/**
 * # Safety
 * `state` must be null or a handle from this library, not yet freed.
 */
void pm_state_free(PmState *state);

/**
 * Husimi function of `state` on the standard grid of `profile_code`.
 *
 * # Safety
 * `state` must be a live handle and `out` a writable handle slot.
 */
int32_t pm_husimi(const PmState *state, int32_t profile_code, PmGrid **out);

/**
 * Optimal two-pointer process at resolution `lambda` with coupling `kappa`.
 *
 * # Safety
 * `out` must be a writable handle slot.
 */
int32_t pm_process_optimal(double lambda, double kappa, int32_t profile_code, PmProcess **out);

/**
 * # Safety
 * `process` must be null or a handle from this library, not yet freed.
 */
void pm_process_free(PmProcess *process);

/**
 * Readout distribution of `process` applied to `state`.
 *
 * # Safety
 * Handles must be live and `out` a writable handle slot.
 */
int32_t pm_pointer_distribution(const PmProcess *process, const PmState *state, PmGrid **out);

/**
 * Worst-case errors of `process` over number levels below `dim`.
 *
 * # Safety
 * `process` must be a live handle and `out` writable.
 */
int32_t pm_error_report(const PmProcess *process,
                        int32_t regime_code,
                        uintptr_t dim,
                        PmErrorSummary *out);

/**
 * Measure-equality oracle with default tolerances and wave vectors.
 *
 * # Safety
 * Both grids must be live handles and `out` writable.
 */
int32_t pm_compare_grids(const PmGrid *first,
                         const PmGrid *second,
                         uintptr_t max_order,
                         PmComparison *out);

/**
 * Axis metadata; `axis` is 0 for position, 1 for momentum.
 *
 * # Safety
 * `grid` must be a live handle; output pointers must be writable.
 */
int32_t pm_grid_axis(const PmGrid *grid, int32_t axis, double *start, double *step, uintptr_t *len);

/**
 * Copies the values, row-major with position as the slow index, into
 * `buf`, which must hold exactly `nx * np` doubles.
 *
 * # Safety
 * `grid` must be a live handle and `buf` point to `len` writable doubles.
 */
int32_t pm_grid_values(const PmGrid *grid, double *buf, uintptr_t len);

/**
 * Total probability on the grid.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
int32_t pm_grid_mass(const PmGrid *grid, double *out);

/**
 * # Safety
 * `grid` must be null or a handle from this library, not yet freed.
 */
void pm_grid_free(PmGrid *grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEMETER_H */
