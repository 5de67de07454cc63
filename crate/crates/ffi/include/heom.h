#ifndef HEOM_H
#define HEOM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HeomStatus {
  HEOM_STATUS_OK = 0,
  HEOM_STATUS_NULL_POINTER = 1,
  HEOM_STATUS_INVALID_ARGUMENT = 2,
  HEOM_STATUS_SIZE_CAP = 3,
  HEOM_STATUS_NUMERICAL = 4,
  HEOM_STATUS_PARSE = 5,
  HEOM_STATUS_BUFFER_TOO_SMALL = 6,
  HEOM_STATUS_PANIC = 7,
} HeomStatus;

typedef enum HeomKind {
  HEOM_KIND_NAIVE = 0,
  HEOM_KIND_SCHUR = 1,
} HeomKind;

/**
 * A rational fit of the Bose function.
 */
typedef struct HeomFit HeomFit;

/**
 * An assembled truncated Liouvillian.
 */
typedef struct HeomMatrix HeomMatrix;

/**
 * A validated HEOM model.
 */
typedef struct HeomModel HeomModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `dst` (NUL-terminated).
 * `*needed` receives the length including the terminator.
 *
 * # Safety
 * `dst` must point to `cap` writable bytes or be null with `cap == 0`.
 */
enum HeomStatus heom_last_error(char *dst, uintptr_t cap, uintptr_t *needed);

/**
 * Build a model from a TOML config document (the CLI format).
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `model` a valid out pointer.
 */
enum HeomStatus heom_model_from_config(const char *toml, struct HeomModel **model);

/**
 * Spin-boson model with an AAA fit of `n_poles` poles. Fluctuation modes with
 * ν > `nu_max` are dropped; pass a negative `nu_max` to keep all of them.
 *
 * # Safety
 * `model` must be a valid out pointer.
 */
enum HeomStatus heom_model_spin_boson(double alpha,
                                      double omega0,
                                      double eta,
                                      double temperature,
                                      double lambda,
                                      uintptr_t n_poles,
                                      double nu_max,
                                      struct HeomModel **model);

/**
 * # Safety
 * `model` must come from this library or be null.
 */
void heom_model_free(struct HeomModel *model);

/**
 * System dimension and number of bath modes.
 *
 * # Safety
 * All pointers must be valid.
 */
enum HeomStatus heom_model_dims(const struct HeomModel *model, uintptr_t *dim, uintptr_t *n_modes);

/**
 * Assemble the truncation `Re γ_n ≤ gamma_star`. `size_cap == 0` uses the default cap.
 *
 * # Safety
 * `model` must be valid; `matrix` a valid out pointer.
 */
enum HeomStatus heom_assemble(const struct HeomModel *model,
                              double gamma_star,
                              enum HeomKind kind,
                              uintptr_t size_cap,
                              struct HeomMatrix **matrix);

/**
 * # Safety
 * `matrix` must come from this library or be null.
 */
void heom_matrix_free(struct HeomMatrix *matrix);

/**
 * Matrix order and number of hierarchy indices.
 *
 * # Safety
 * All pointers must be valid.
 */
enum HeomStatus heom_matrix_size(const struct HeomMatrix *matrix,
                                 uintptr_t *order,
                                 uintptr_t *n_indices);

/**
 * Copy the matrix row-major into `re`/`im`, each of length `len ≥ order²`.
 *
 * # Safety
 * `re` and `im` must point to `len` writable doubles.
 */
enum HeomStatus heom_matrix_copy(const struct HeomMatrix *matrix,
                                 double *re,
                                 double *im,
                                 uintptr_t len);

/**
 * Eigenvalues sorted by descending real part, then descending imaginary part.
 *
 * # Safety
 * `re` and `im` must point to `len ≥ order` writable doubles.
 */
enum HeomStatus heom_matrix_eigenvalues(const struct HeomMatrix *matrix,
                                        double *re,
                                        double *im,
                                        uintptr_t len);

/**
 * Stability at relative tolerance `tol_rel` (times the Frobenius norm).
 * `*stable` is 1 when no eigenvalue has real part above the tolerance.
 *
 * # Safety
 * All pointers must be valid.
 */
enum HeomStatus heom_matrix_stability(const struct HeomMatrix *matrix,
                                      double tol_rel,
                                      int32_t *stable,
                                      double *abscissa);

/**
 * Symmetrized AAA fit of the Bose function with `n_poles` poles.
 *
 * # Safety
 * `fit` must be a valid out pointer.
 */
enum HeomStatus heom_fit_bath(double temperature,
                              double lambda,
                              uintptr_t n_poles,
                              struct HeomFit **fit);

/**
 * # Safety
 * `fit` must come from this library or be null.
 */
void heom_fit_free(struct HeomFit *fit);

/**
 * Number of poles and maximum relative validation error.
 *
 * # Safety
 * All pointers must be valid.
 */
enum HeomStatus heom_fit_info(const struct HeomFit *fit, uintptr_t *n_poles, double *max_rel_error);

/**
 * Pole positions ν (descending) and residues r.
 *
 * # Safety
 * `nu` and `r` must point to `len ≥ n_poles` writable doubles.
 */
enum HeomStatus heom_fit_poles(const struct HeomFit *fit, double *nu, double *r, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEOM_H */
