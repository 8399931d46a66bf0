#ifndef OTMORPH_H
#define OTMORPH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OtmBoundary {
  OTM_BOUNDARY_MIRROR = 0,
  OTM_BOUNDARY_PERIODIC = 1,
} OtmBoundary;

typedef enum OtmStatus {
  OTM_STATUS_OK = 0,
  OTM_STATUS_NULL_POINTER = 1,
  OTM_STATUS_INVALID_GRID = 2,
  OTM_STATUS_SHAPE_MISMATCH = 3,
  OTM_STATUS_INVALID_CONFIG = 4,
  OTM_STATUS_INVALID_ARGUMENT = 5,
  OTM_STATUS_UNSUPPORTED = 6,
  OTM_STATUS_NON_FINITE = 7,
  OTM_STATUS_IO = 8,
  OTM_STATUS_OUT_OF_RANGE = 9,
  OTM_STATUS_PANIC = 10,
} OtmStatus;

/*
 Solver settings; created with the defaults of `otm_config_new`.
 */
typedef struct OtmConfig OtmConfig;

/*
 Grid shape: spatial axes, time steps and boundary conditions.
 */
typedef struct OtmGrid OtmGrid;

/*
 Frames and run statistics of a finished solve.
 */
typedef struct OtmSolution OtmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *otm_version(void);

/*
 Why the latest call on this thread failed; empty after a successful call.
 The pointer stays valid until the next call into the library on this
 thread.
 */
const char *otm_last_error(void);

/*
 Creates a grid with 1 to 3 spatial axes; a third axis is the colour axis
 and must have length 3.
 */
enum OtmStatus otm_grid_new(const size_t *dims,
                            size_t ndims,
                            size_t time_steps,
                            enum OtmBoundary spatial_boundary,
                            enum OtmBoundary color_boundary,
                            struct OtmGrid **out);

void otm_grid_free(struct OtmGrid *grid);

/*
 Number of values in one frame.
 */
size_t otm_grid_cells(const struct OtmGrid *grid);

/*
 Creates a configuration for the constrained model with p = 2, σ = 50,
 τ = 0.99/σ, θ = 1 and 2000 iterations.
 */
enum OtmStatus otm_config_new(struct OtmConfig **out);

void otm_config_free(struct OtmConfig *config);

/*
 Switches to the constrained model.
 */
enum OtmStatus otm_config_set_constrained(struct OtmConfig *config);

/*
 Switches to the penalised model with weight `lambda > 0`.
 */
enum OtmStatus otm_config_set_penalized(struct OtmConfig *config, double lambda);

enum OtmStatus otm_config_set_p(struct OtmConfig *config, double p);

/*
 Sets both step sizes; `sigma * tau` must be below 1.
 */
enum OtmStatus otm_config_set_steps(struct OtmConfig *config, double sigma, double tau);

enum OtmStatus otm_config_set_theta(struct OtmConfig *config, double theta);

enum OtmStatus otm_config_set_iterations(struct OtmConfig *config, size_t iterations);

/*
 Stops once the dual residual falls below `tolerance`; a value ≤ 0
 disables early stopping.
 */
enum OtmStatus otm_config_set_tolerance(struct OtmConfig *config, double tolerance);

/*
 Anisotropic TV weight; 0 disables the term.
 */
enum OtmStatus otm_config_set_tv(struct OtmConfig *config, double gamma);

/*
 Clips emitted interior frames to [0, 1] when `enabled` is non-zero.
 */
enum OtmStatus otm_config_set_gamut_clamp(struct OtmConfig *config, bool enabled);

/*
 Solves between `f0` and `f1`, each holding `len = otm_grid_cells(grid)`
 non-negative values with the first axis fastest.
 */
enum OtmStatus otm_run(const struct OtmGrid *grid,
                       const struct OtmConfig *config,
                       const double *f0,
                       const double *f1,
                       size_t len,
                       struct OtmSolution **out);

void otm_solution_free(struct OtmSolution *solution);

/*
 Number of frames, `time_steps + 1`.
 */
size_t otm_solution_frame_count(const struct OtmSolution *solution);

/*
 Copies frame `k` into `out`, which must hold exactly `len` values.
 */
enum OtmStatus otm_solution_frame(const struct OtmSolution *solution,
                                  size_t k,
                                  double *out,
                                  size_t len);

/*
 Number of iterations performed.
 */
size_t otm_solution_iterations(const struct OtmSolution *solution);

/*
 Final energy, continuity residual and dual residual; any output pointer
 may be null. The energy is +inf if an interpolated density is negative.
 */
enum OtmStatus otm_solution_stats(const struct OtmSolution *solution,
                                  double *energy,
                                  double *residual,
                                  double *dual_residual);

/*
 Copies the per-iteration energy trace into `out`, which must hold exactly
 `otm_solution_iterations` values.
 */
enum OtmStatus otm_solution_energy_trace(const struct OtmSolution *solution,
                                         double *out,
                                         size_t len);

/*
 Proximal map of `J_p / sigma` at `(x, y)` with `x` of length `d`. Writes
 the result to `x_out` (length `d`) and `y_out`; `steps`, if non-null,
 receives the number of Newton steps.
 */
enum OtmStatus otm_prox_jp(const double *x,
                           size_t d,
                           double y,
                           double p,
                           double sigma,
                           double *x_out,
                           double *y_out,
                           size_t *steps);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTMORPH_H */
