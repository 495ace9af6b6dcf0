#ifndef HOMOG_H
#define HOMOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HomogStatus {
  HOMOG_STATUS_OK = 0,
  /*
   Null pointer, invalid UTF-8 or an out-of-range argument.
   */
  HOMOG_STATUS_INVALID_ARGUMENT = 1,
  /*
   Invalid spec, grid, region or parameters.
   */
  HOMOG_STATUS_CONFIG_ERROR = 2,
  /*
   A solver or quadrature failed to converge.
   */
  HOMOG_STATUS_SOLVER_ERROR = 3,
  HOMOG_STATUS_SUFFICIENCY_VIOLATED = 4,
  /*
   A Rust panic was caught at the boundary.
   */
  HOMOG_STATUS_PANIC = 5,
} HomogStatus;

/*
 An effective Hamiltonian sampled on a momentum grid.
 */
typedef struct HomogEffective HomogEffective;

/*
 A Hamiltonian.
 */
typedef struct HomogSpec HomogSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failure on this thread, or null. Valid until the next failing call.
 */
const char *homog_last_error_message(void);

/*
 A built-in spec: `integrable`, `pendulum` or `bump`.

 # Safety
 `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HomogStatus homog_spec_builtin(const char *name, size_t dim, struct HomogSpec **out);

/*
 A spec from its JSON form.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HomogStatus homog_spec_from_json(const char *json, struct HomogSpec **out);

/*
 # Safety
 `spec` must come from a `homog_spec_*` constructor, or be null.
 */
void homog_spec_free(struct HomogSpec *spec);

/*
 Dimension of the spec, or 0 for null.

 # Safety
 `spec` must be a live handle or null.
 */
size_t homog_spec_dim(const struct HomogSpec *spec);

/*
 `H̄` on `count` points of `[lo, hi]` per axis. `method` is `minimax`, `minimax-direct`,
 `quadrature` or `lax-oleinik`.

 # Safety
 `spec` must be a live handle, `method` a NUL-terminated string and `out` a valid pointer.
 */
enum HomogStatus homog_effective(const struct HomogSpec *spec,
                                 double lo,
                                 double hi,
                                 size_t count,
                                 const char *method,
                                 struct HomogEffective **out);

/*
 # Safety
 `eff` must come from [`homog_effective`], or be null.
 */
void homog_effective_free(struct HomogEffective *eff);

/*
 Number of samples, or 0 for null.

 # Safety
 `eff` must be a live handle or null.
 */
size_t homog_effective_len(const struct HomogEffective *eff);

/*
 Copies values and bounds into caller buffers of length `len`; any buffer may be null.

 # Safety
 Non-null buffers must hold `len` doubles; `eff` must be a live handle.
 */
enum HomogStatus homog_effective_copy(const struct HomogEffective *eff,
                                      double *value,
                                      double *lower,
                                      double *upper,
                                      size_t len);

/*
 `β(0) = -min H̄` with sub-grid refinement.

 # Safety
 `eff` must be a live handle and `out` a valid pointer.
 */
enum HomogStatus homog_beta_zero(const struct HomogEffective *eff, double *out);

/*
 The samples as JSON; free with [`homog_string_free`].

 # Safety
 `eff` must be a live handle and `out` a valid pointer.
 */
enum HomogStatus homog_effective_json(const struct HomogEffective *eff, char **out);

/*
 The metric report for `region` (`sublevel:<r>` or `unit-ball`) as JSON.

 # Safety
 `spec` must be a live handle, `region` a NUL-terminated string and `out` a valid pointer.
 */
enum HomogStatus homog_metrics_json(const struct HomogSpec *spec, const char *region, char **out);

/*
 The bump certificate for `(δ, C, c)` in dimension 1 as JSON; `verdict` receives 1 or 0.

 # Safety
 `out` must be a valid pointer; `verdict` may be null.
 */
enum HomogStatus homog_counterexample_json(double delta,
                                           double high,
                                           double low,
                                           char **out,
                                           int32_t *verdict);

/*
 # Safety
 `s` must come from this library, or be null.
 */
void homog_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOMOG_H */
