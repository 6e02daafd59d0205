#ifndef LBCS_H
#define LBCS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LbBranch {
  LB_BRANCH_PLUS = 0,
  LB_BRANCH_MINUS = 1,
} LbBranch;

typedef enum LbComponent {
  LB_COMPONENT_TOTAL = 0,
  LB_COMPONENT_UPPER = 1,
  LB_COMPONENT_LOWER = 2,
} LbComponent;

typedef enum LbFamily {
  LB_FAMILY_COHERENT_A = 0,
  LB_FAMILY_COHERENT_B = 1,
  LB_FAMILY_PHI = 2,
  LB_FAMILY_PSI = 3,
  LB_FAMILY_ETA = 4,
  LB_FAMILY_XI = 5,
} LbFamily;

typedef enum LbFormat {
  LB_FORMAT_JSON = 0,
  LB_FORMAT_CSV = 1,
} LbFormat;

typedef enum LbStatus {
  LB_STATUS_OK = 0,
  LB_STATUS_CUTOFF = 1,
  LB_STATUS_EXCEPTIONAL_POINT = 2,
  LB_STATUS_REGIME_BOUNDARY = 3,
  LB_STATUS_CONTRACT = 4,
  LB_STATUS_BASIS_MISMATCH = 5,
  LB_STATUS_USAGE = 6,
  LB_STATUS_IO = 7,
  LB_STATUS_NULL_POINTER = 8,
  LB_STATUS_INVALID_ARGUMENT = 9,
  LB_STATUS_PANIC = 10,
} LbStatus;

/**
 * Opaque density grid.
 */
typedef struct LbDensity LbDensity;

/**
 * Opaque constructed state.
 */
typedef struct LbState LbState;

typedef struct LbComplex {
  double re;
  double im;
} LbComplex;

typedef struct LbStateSpec {
  enum LbFamily family;
  enum LbBranch branch;
  struct LbComplex z1;
  struct LbComplex z2;
  /**
   * Potential strength; must be 0 for the coherent families.
   */
  double v;
  double v_f;
  double xi;
  size_t nmax1;
  size_t nmax2;
} LbStateSpec;

typedef struct LbGridSpec {
  double x_min;
  double x_max;
  size_t nx;
  double y_min;
  double y_max;
  size_t ny;
} LbGridSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *lb_last_error_message(void);

const char *lb_version(void);

/**
 * # Safety
 * `spec` must point to a valid spec and `out_state` to writable storage.
 */
enum LbStatus lb_state_build(const struct LbStateSpec *spec, struct LbState **out_state);

/**
 * # Safety
 * `state` must come from `lb_state_build` and not be freed twice; null is ignored.
 */
void lb_state_free(struct LbState *state);

/**
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_state_dims(const struct LbState *state, size_t *nmax1, size_t *nmax2);

/**
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_state_norm(const struct LbState *state, double *norm);

/**
 * Squared norms of the two spinor components.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_state_component_masses(const struct LbState *state, double *upper, double *lower);

/**
 * Coefficients of `e_{n1} (x) e_{n2}` in the upper and lower components.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_state_coefficient(const struct LbState *state,
                                   size_t n1,
                                   size_t n2,
                                   struct LbComplex *upper,
                                   struct LbComplex *lower);

/**
 * `<a, b>`, antilinear in `a`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_state_dot(const struct LbState *a,
                           const struct LbState *b,
                           struct LbComplex *result);

/**
 * # Safety
 * Pointers must be valid; `out_density` receives a handle freed by `lb_density_free`.
 */
enum LbStatus lb_density_compute(const struct LbState *state,
                                 const struct LbGridSpec *grid,
                                 struct LbDensity **out_density);

/**
 * # Safety
 * `density` must come from `lb_density_compute`; null is ignored.
 */
void lb_density_free(struct LbDensity *density);

/**
 * Borrowed row-major grid (`x` fastest), valid while the handle lives.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_density_data(const struct LbDensity *density,
                              enum LbComponent component,
                              const double **data,
                              size_t *nx,
                              size_t *ny);

/**
 * Grid-integrated total density and the mass-capture warning flag.
 *
 * # Safety
 * Pointers must be valid.
 */
enum LbStatus lb_density_mass(const struct LbDensity *density, double *mass, bool *warning);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string.
 */
enum LbStatus lb_density_export(const struct LbDensity *density,
                                enum LbFormat format,
                                const char *path);

/**
 * Eigenvalue `E_p` of the PT-symmetric Hamiltonian.
 *
 * # Safety
 * `result` must be valid.
 */
enum LbStatus lb_eigenvalue(int64_t p, double v, double v_f, double xi, struct LbComplex *result);

/**
 * # Safety
 * `result` must be valid.
 */
enum LbStatus lb_alpha(uint64_t p, double v, enum LbBranch b, struct LbComplex *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LBCS_H */
