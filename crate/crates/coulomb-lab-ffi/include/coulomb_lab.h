/* C interface to the coulomb-lab numerical laboratory. */

#ifndef COULOMB_LAB_H
#define COULOMB_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Classification of a space-time exponent pair.
 */
typedef enum ClabAdmissibility {
  CLAB_ADMISSIBILITY_NOT_ALLOWED = 0,
  CLAB_ADMISSIBILITY_INTERIOR = 1,
  CLAB_ADMISSIBILITY_EQUALITY_EDGE = 2,
} ClabAdmissibility;

/**
 * Status code of every fallible call.
 */
typedef enum ClabStatus {
  CLAB_STATUS_OK = 0,
  CLAB_STATUS_NULL_ARGUMENT = 1,
  CLAB_STATUS_INVALID_ARGUMENT = 2,
  CLAB_STATUS_PARSE_ERROR = 3,
  CLAB_STATUS_RUNTIME_ERROR = 4,
  CLAB_STATUS_IO_ERROR = 5,
} ClabStatus;

/**
 * Opaque scenario handle.
 */
typedef struct ClabScenario ClabScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. Never null; owned by
 * the library; valid until the next failing call on the same thread.
 */
const char *clab_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *clab_version(void);

/**
 * Regular solution `Phi` of the reduced Laplace problem and its derivative.
 *
 * # Safety
 * `out_value` and `out_derivative` must be valid writable pointers.
 */
enum ClabStatus clab_phi(uint32_t d, double r, double *out_value, double *out_derivative);

/**
 * Fast-decaying solution `Psi` and its derivative.
 *
 * # Safety
 * `out_value` and `out_derivative` must be valid writable pointers.
 */
enum ClabStatus clab_psi(uint32_t d, double r, double *out_value, double *out_derivative);

/**
 * Membership of `(p, q)` in the radial Coulomb allowed region, with exact
 * rational arithmetic. A zero denominator encodes an infinite exponent.
 *
 * # Safety
 * `out` must be a valid writable pointer.
 */
enum ClabStatus clab_pair_allowed(uint32_t d,
                                  int64_t p_num,
                                  int64_t p_den,
                                  int64_t q_num,
                                  int64_t q_den,
                                  enum ClabAdmissibility *out);

/**
 * Parses a scenario configuration (same text format as the CLI) into an
 * opaque handle. On success the handle must be released with
 * [`clab_scenario_free`].
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid writable
 * pointer.
 */
enum ClabStatus clab_scenario_parse(const char *text, struct ClabScenario **out);

/**
 * Applies a `section.key=value` override; the amended configuration is
 * validated immediately.
 *
 * # Safety
 * `scenario` must be a live handle from [`clab_scenario_parse`].
 */
enum ClabStatus clab_scenario_set(struct ClabScenario *scenario,
                                  const char *key,
                                  const char *value);

/**
 * Conserved energy of the configured initial data.
 *
 * # Safety
 * `scenario` must be a live handle from [`clab_scenario_parse`].
 */
enum ClabStatus clab_scenario_initial_energy(const struct ClabScenario *scenario,
                                             double *out_energy);

/**
 * Evolves the scenario and writes the energy-ledger CSV to `csv_path`.
 * Returns the number of rows written through `out_rows` when non-null.
 *
 * # Safety
 * `scenario` must be a live handle from [`clab_scenario_parse`];
 * `csv_path` must be a valid NUL-terminated path.
 */
enum ClabStatus clab_scenario_run_evolve(const struct ClabScenario *scenario,
                                         const char *csv_path,
                                         int *out_rows);

/**
 * Releases a scenario handle. A null pointer is ignored.
 *
 * # Safety
 * `scenario` must have come from [`clab_scenario_parse`] and must not be
 * used afterwards.
 */
void clab_scenario_free(struct ClabScenario *scenario);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* COULOMB_LAB_H */
