#ifndef PLSIM_H
#define PLSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlsimStatus {
  PLSIM_STATUS_OK = 0,
  PLSIM_STATUS_NULL_POINTER = 1,
  PLSIM_STATUS_INVALID_ARGUMENT = 2,
  PLSIM_STATUS_DIVERGENCE = 3,
  PLSIM_STATUS_NO_CONVERGENCE = 4,
  PLSIM_STATUS_BUFFER_TOO_SMALL = 5,
  PLSIM_STATUS_NOT_RUN = 6,
  PLSIM_STATUS_PANIC = 7,
} PlsimStatus;

/**
 * First-step method of BDF2.
 */
typedef enum PlsimBootstrap {
  PLSIM_BOOTSTRAP_BACKWARD_EULER = 0,
  PLSIM_BOOTSTRAP_TRAPEZOIDAL = 1,
} PlsimBootstrap;

/**
 * The discrete generator of one damping case.
 */
typedef struct PlsimGenerator PlsimGenerator;

/**
 * A configured time-domain run and, after `plsim_simulation_run`, its result.
 */
typedef struct PlsimSimulation PlsimSimulation;

/**
 * Material constants; `xi` is taken as given.
 */
typedef struct PlsimParams {
  double rho;
  double alpha;
  double gamma;
  double eps3;
  double mu;
  double xi;
  double length;
} PlsimParams;

typedef struct PlsimDamping {
  double a;
  double b;
  double c;
} PlsimDamping;

typedef struct PlsimEnergy {
  double kinetic;
  double potential;
  double magnetic;
  double electrical;
  double total;
} PlsimEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *plsim_version(void);

/**
 * Message of the last failure on this thread; valid until the next call
 * into the library from the same thread.
 */
const char *plsim_last_error(void);

/**
 * All constants equal to one.
 */
struct PlsimParams plsim_params_unit(void);

/**
 * Sets up a run on `n_cells` cells. `initial` holds the eight fields
 * `v, phi, theta, eta, v_t, phi_t, theta_t, eta_t`, each `n_cells + 1`
 * nodal values, field after field; a null pointer selects the benchmark data.
 *
 * # Safety
 * Pointers must be null or valid; `initial` must hold `8 (n_cells + 1)` values.
 */
enum PlsimStatus plsim_simulation_new(const struct PlsimParams *params,
                                      const struct PlsimDamping *damping,
                                      size_t n_cells,
                                      double dt,
                                      double t_end,
                                      enum PlsimBootstrap bootstrap,
                                      const double *initial,
                                      struct PlsimSimulation **out);

/**
 * Advances the configured run to `t_end`.
 *
 * # Safety
 * `sim` must be null or a live handle from `plsim_simulation_new`.
 */
enum PlsimStatus plsim_simulation_run(struct PlsimSimulation *sim);

/**
 * Total energy at every step `0..=steps`; `written` receives the count.
 *
 * # Safety
 * `sim` must be a live handle; `out` must hold `cap` doubles.
 */
enum PlsimStatus plsim_simulation_energy(const struct PlsimSimulation *sim,
                                         double *out,
                                         size_t cap,
                                         size_t *written);

/**
 * Energy breakdown at step `index`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be valid.
 */
enum PlsimStatus plsim_simulation_energy_at(const struct PlsimSimulation *sim,
                                            size_t index,
                                            struct PlsimEnergy *out);

/**
 * Final state in the layout of `plsim_simulation_new`.
 *
 * # Safety
 * `sim` must be a live handle; `out` must hold `cap` doubles.
 */
enum PlsimStatus plsim_simulation_final_state(const struct PlsimSimulation *sim,
                                              double *out,
                                              size_t cap,
                                              size_t *written);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void plsim_simulation_free(struct PlsimSimulation *sim);

/**
 * Assembles the generator; fails above the dense size cap.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum PlsimStatus plsim_generator_new(const struct PlsimParams *params,
                                     const struct PlsimDamping *damping,
                                     size_t n_cells,
                                     struct PlsimGenerator **out);

/**
 * Dimension of the compressed generator, i.e. the eigenvalue count.
 *
 * # Safety
 * `gen` must be a live handle; `out` valid.
 */
enum PlsimStatus plsim_generator_dimension(const struct PlsimGenerator *gen, size_t *out);

/**
 * Eigenvalues sorted by real part, descending.
 *
 * # Safety
 * `gen` must be a live handle; `re`, `im` must hold `cap` doubles.
 */
enum PlsimStatus plsim_generator_eigenvalues(const struct PlsimGenerator *gen,
                                             double *re,
                                             double *im,
                                             size_t cap,
                                             size_t *written);

/**
 * Largest real part of the spectrum.
 *
 * # Safety
 * `gen` must be a live handle; `out` valid.
 */
enum PlsimStatus plsim_generator_spectral_abscissa(const struct PlsimGenerator *gen, double *out);

/**
 * `||(i lambda I - A_h)^{-1}||` in the energy norm; `INFINITY` when the
 * shift is numerically singular.
 *
 * # Safety
 * `gen` must be a live handle; `out` valid.
 */
enum PlsimStatus plsim_generator_resolvent_norm(const struct PlsimGenerator *gen,
                                                double lambda,
                                                double *out);

/**
 * # Safety
 * `gen` must be null or a handle not yet freed.
 */
void plsim_generator_free(struct PlsimGenerator *gen);

/**
 * Final constant of the explicit resolvent bound for the damping case;
 * `poincare <= 0` selects `2L/pi`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PlsimStatus plsim_resolvent_bound(const struct PlsimParams *params,
                                       const struct PlsimDamping *damping,
                                       double poincare,
                                       double *out);

/**
 * Smallest resonant index `n <= n_max`, or `-1`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PlsimStatus plsim_resonance_check(const struct PlsimParams *params,
                                       uint32_t n_max,
                                       double tol,
                                       int64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLSIM_H */
