#ifndef PHPLATE_H
#define PHPLATE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PhplateScheme {
  PHPLATE_SCHEME_BJT = 0,
  PHPLATE_SCHEME_AFW = 1,
  PHPLATE_SCHEME_HHJ = 2,
} PhplateScheme;

/**
 * Result code of every fallible call.
 */
typedef enum PhplateStatus {
  PHPLATE_STATUS_OK = 0,
  PHPLATE_STATUS_NULL_POINTER = 1,
  PHPLATE_STATUS_INVALID_ARGUMENT = 2,
  PHPLATE_STATUS_BUFFER_TOO_SMALL = 3,
  PHPLATE_STATUS_STRUCTURE_VIOLATION = 4,
  PHPLATE_STATUS_SOLVER_FAILURE = 5,
  PHPLATE_STATUS_INTERNAL = 6,
} PhplateStatus;

typedef enum PhplateField {
  PHPLATE_FIELD_VELOCITY = 0,
  PHPLATE_FIELD_ANGULAR_VELOCITY = 1,
  PHPLATE_FIELD_MOMENT = 2,
  PHPLATE_FIELD_SHEAR = 3,
  PHPLATE_FIELD_MULTIPLIER = 4,
} PhplateField;

/**
 * Selects the mass matrix `M` or the structure matrix `J`.
 */
typedef enum PhplateMatrix {
  PHPLATE_MATRIX_MASS = 0,
  PHPLATE_MATRIX_STRUCTURE = 1,
} PhplateMatrix;

/**
 * Opaque handle to an assembled system with boundary conditions applied.
 */
typedef struct PhplateSystem PhplateSystem;

/**
 * Material data in SI units.
 */
typedef struct PhplateMaterial {
  double young;
  double poisson;
  double density;
  double thickness;
  double shear_correction;
} PhplateMaterial;

typedef struct PhplateStructureReport {
  /**
   * Relative defect `|M - M^T| / |M|`.
   */
  double mass_symmetry;
  /**
   * Relative defect `|J + J^T| / |J|`.
   */
  double structure_skewness;
  size_t positive_pivots;
  size_t negative_pivots;
  size_t zero_pivots;
  /**
   * Number of retained multiplier dofs, which should equal the negative
   * pivot count.
   */
  size_t multiplier_dofs;
  /**
   * Nonzero when both defects are within tolerance and the inertia
   * matches the multiplier count.
   */
  uint8_t holds;
} PhplateStructureReport;

/**
 * Summary of a manufactured-solution run on an `n x n` mesh.
 */
typedef struct PhplateRunSummary {
  double h;
  double dt;
  size_t steps;
  double max_solve_residual;
  double relative_power_residual;
  double relative_energy_drift;
} PhplateRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default material of a scheme: the thick plate for the Mindlin schemes and
 * the thin plate for the Kirchhoff scheme.
 */
struct PhplateMaterial phplate_default_material(enum PhplateScheme scheme);

/**
 * Assembles the system of `scheme` with polynomial degree `degree` on the
 * unit square split into `n x n` cells. `material` may be null to use the
 * scheme's default material. On success `*out` receives a new handle.
 *
 * # Safety
 * `out` must be valid for writes; `material` must be null or valid for reads.
 */
enum PhplateStatus phplate_system_new(enum PhplateScheme scheme,
                                      size_t n,
                                      size_t degree,
                                      const struct PhplateMaterial *material,
                                      struct PhplateSystem **out);

/**
 * Releases a handle. Passing null is a no-op.
 *
 * # Safety
 * `system` must be null or a handle from `phplate_system_new` that has not
 * been freed.
 */
void phplate_system_free(struct PhplateSystem *system);

/**
 * Number of retained unknowns.
 *
 * # Safety
 * `system` must be a live handle; `out` must be valid for writes.
 */
enum PhplateStatus phplate_system_dim(const struct PhplateSystem *system, size_t *out);

/**
 * Number of fields of the scheme; fields are indexed in global dof order.
 *
 * # Safety
 * `system` must be a live handle; `out` must be valid for writes.
 */
enum PhplateStatus phplate_system_field_count(const struct PhplateSystem *system, size_t *out);

/**
 * Retained dofs of one field. Fields absent from the scheme report
 * `InvalidArgument`.
 *
 * # Safety
 * `system` must be a live handle; `out` must be valid for writes.
 */
enum PhplateStatus phplate_system_field_dofs(const struct PhplateSystem *system,
                                             enum PhplateField field,
                                             size_t *out);

/**
 * Checks symmetry of `M`, skew-symmetry of `J` and the inertia of `M`.
 *
 * # Safety
 * `system` must be a live handle; `out` must be valid for writes.
 */
enum PhplateStatus phplate_system_check_structure(const struct PhplateSystem *system,
                                                  struct PhplateStructureReport *out);

/**
 * Number of stored entries of `M` or `J`.
 *
 * # Safety
 * `system` must be a live handle; `out` must be valid for writes.
 */
enum PhplateStatus phplate_system_matrix_nnz(const struct PhplateSystem *system,
                                             enum PhplateMatrix which,
                                             size_t *out);

/**
 * Copies `M` or `J` in coordinate form, row-major, into caller buffers of
 * length `capacity`. Query the required length with
 * `phplate_system_matrix_nnz`; shorter buffers report `BufferTooSmall`.
 *
 * # Safety
 * `system` must be a live handle; `rows`, `cols` and `values` must each be
 * valid for `capacity` writes.
 */
enum PhplateStatus phplate_system_matrix_coo(const struct PhplateSystem *system,
                                             enum PhplateMatrix which,
                                             size_t *rows,
                                             size_t *cols,
                                             double *values,
                                             size_t capacity);

/**
 * Integrates the manufactured solution of `scheme` on an `n x n` mesh with
 * the default time step and final time, and reports the maximum-in-time
 * error of every field. `fields` and `errors` receive one entry per field
 * of the scheme in global dof order and must hold `capacity` entries;
 * `*count` receives the number of fields. `material` may be null.
 *
 * # Safety
 * `summary` and `count` must be valid for writes; `fields` and `errors`
 * must be valid for `capacity` writes; `material` must be null or valid.
 */
enum PhplateStatus phplate_run_manufactured(enum PhplateScheme scheme,
                                            size_t n,
                                            size_t degree,
                                            const struct PhplateMaterial *material,
                                            struct PhplateRunSummary *summary,
                                            enum PhplateField *fields,
                                            double *errors,
                                            size_t capacity,
                                            size_t *count);

/**
 * Copies the last error message of the calling thread as a NUL-terminated
 * string into `buffer`, truncating to `len - 1` bytes. Returns the full
 * message length excluding the terminator, so a return value `>= len`
 * signals truncation. `buffer` may be null to query the length.
 *
 * # Safety
 * `buffer` must be null or valid for `len` writes.
 */
size_t phplate_last_error_message(char *buffer, size_t len);

/**
 * Version string of the library, NUL-terminated and statically allocated.
 */
const char *phplate_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHPLATE_H */
