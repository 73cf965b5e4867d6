#ifndef CENS_FFI_H
#define CENS_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CensStatus {
  CENS_STATUS_OK = 0,
  CENS_STATUS_NULL_POINTER = 1,
  CENS_STATUS_INVALID_UTF8 = 2,
  CENS_STATUS_INVALID_JSON = 3,
  CENS_STATUS_BUFFER_TOO_SMALL = 4,
  CENS_STATUS_INVALID_ARGUMENT = 5,
  CENS_STATUS_NON_HERMITIAN_INPUT = 6,
  CENS_STATUS_CONVERGENCE_FAILURE = 7,
  CENS_STATUS_DIMENSION_OVERFLOW = 8,
  CENS_STATUS_DIMENSION_MISMATCH = 9,
  CENS_STATUS_INVALID_SPEC = 10,
  CENS_STATUS_INVALID_GRID = 11,
  CENS_STATUS_ALIASING_ERROR = 12,
  CENS_STATUS_INVALID_REGULARIZATION = 13,
  CENS_STATUS_QUADRATURE_UNDERRESOLVED = 14,
  CENS_STATUS_GRID_TOO_COARSE = 15,
  CENS_STATUS_ENERGY_OFF_CLOCK_LATTICE = 16,
  CENS_STATUS_EMPTY_GRID = 17,
  CENS_STATUS_CONSTRAINT_VIOLATED = 18,
  CENS_STATUS_STEP_SIZE_TOO_LARGE = 19,
  CENS_STATUS_NON_MONOTONE_TIME = 20,
  CENS_STATUS_SHOOTING_DIVERGED = 21,
  CENS_STATUS_ENERGY_BELOW_BARRIER = 22,
  CENS_STATUS_PANIC = 99,
} CensStatus;

// Opaque classical system `H = |p|^2 / 2m + V(q)`.
typedef struct CensClassicalSystem CensClassicalSystem;

// Opaque Hermitian system Hamiltonian.
typedef struct CensHamiltonian CensHamiltonian;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *cens_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cens_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void cens_string_free(char *s);

// Builds a Hamiltonian from a quantum model JSON object, e.g.
// `{"kind": "two_level", "e0": 0, "e1": 1}`.
//
// # Safety
// `model_json` must be a NUL-terminated string; `out` must be writable.
enum CensStatus cens_hamiltonian_from_model_json(const char *model_json,
                                                 struct CensHamiltonian **out);

// Builds a Hamiltonian from row-major real and imaginary parts (`n * n` each;
// `im` may be NULL for a real matrix).
//
// # Safety
// `re` (and `im` when non-NULL) must hold `n * n` doubles; `out` must be writable.
enum CensStatus cens_hamiltonian_from_matrix(const double *re,
                                             const double *im,
                                             size_t n,
                                             struct CensHamiltonian **out);

// Releases a Hamiltonian. NULL is ignored.
//
// # Safety
// `h` must come from this library and not have been freed already.
void cens_hamiltonian_free(struct CensHamiltonian *h);

// Dimension of the Hilbert space, 0 for NULL.
//
// # Safety
// `h` must be NULL or a live handle.
size_t cens_hamiltonian_dim(const struct CensHamiltonian *h);

// Writes the ascending eigenvalues into `out` (capacity `len`).
//
// # Safety
// `h` must be a live handle; `out` must hold `len` doubles.
enum CensStatus cens_hamiltonian_eigenvalues(const struct CensHamiltonian *h,
                                             double *out,
                                             size_t len);

// `Tr exp(-beta H)`.
//
// # Safety
// `h` must be a live handle; `out` must be writable.
enum CensStatus cens_canonical_from_kernel(const struct CensHamiltonian *h,
                                           double beta,
                                           double *out);

// `Tr g_width(H - energy)`.
//
// # Safety
// `h` must be a live handle; `out` must be writable.
enum CensStatus cens_microcanonical_from_kernel(const struct CensHamiltonian *h,
                                                double energy,
                                                double width,
                                                double *out);

// Trapezoid `int dE Omega(E) exp(-beta E)` on `grid`.
//
// # Safety
// `h` must be a live handle; `grid` must hold `len` doubles; `out` must be writable.
enum CensStatus cens_laplace_consistency(const struct CensHamiltonian *h,
                                         double width,
                                         double beta,
                                         const double *grid,
                                         size_t len,
                                         double *out);

// Full two-route report (auto clock, default grids) as a JSON string; free
// it with [`cens_string_free`].
//
// # Safety
// `model_json` must be a NUL-terminated string; `out_json` must be writable.
enum CensStatus cens_compare_report_json(const char *model_json, char **out_json);

// Builds a classical system from JSON, e.g. `{"kind": "harmonic", "omega": 1}`.
//
// # Safety
// `system_json` must be a NUL-terminated string; `out` must be writable.
enum CensStatus cens_classical_system_from_json(const char *system_json,
                                                struct CensClassicalSystem **out);

// Releases a classical system. NULL is ignored.
//
// # Safety
// `sys` must come from this library and not have been freed already.
void cens_classical_system_free(struct CensClassicalSystem *sys);

// Degrees of freedom, 0 for NULL.
//
// # Safety
// `sys` must be NULL or a live handle.
size_t cens_classical_system_dof(const struct CensClassicalSystem *sys);

// Fixed-time gauge integration over `[t0, t1]`; writes the final `q`, `p`
// (`dof` entries each) and the maximum constraint drift.
//
// # Safety
// `sys` must be a live handle; vectors must hold `dof` doubles; outputs must be writable.
enum CensStatus cens_gauge_fix_hamilton(const struct CensClassicalSystem *sys,
                                        const double *q0,
                                        const double *p0,
                                        size_t dof,
                                        double t0,
                                        double t1,
                                        size_t n_steps,
                                        double *q_out,
                                        double *p_out,
                                        double *drift_out);

// Fixed-energy shooting from `q_a` to `q_b`; writes `p_a` (`dof` entries)
// and the time of flight.
//
// # Safety
// `sys` must be a live handle; vectors must hold `dof` doubles; outputs must be writable.
enum CensStatus cens_maupertuis_shoot(const struct CensClassicalSystem *sys,
                                      const double *q_a,
                                      const double *q_b,
                                      size_t dof,
                                      double energy,
                                      const double *init_guess,
                                      double *p_a_out,
                                      double *time_of_flight_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CENS_FFI_H */
